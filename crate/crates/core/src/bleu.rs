//! Single-reference corpus BLEU.
//!
//! Per-sentence n-gram counts are clipped by the reference counts and summed
//! over the corpus before the precisions are combined, so sentence order
//! never affects the score.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::TOKENIZER_VERSION;

/// Clipped matches over total hypothesis n-grams.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramMatch {
    pub matched: u64,
    pub total: u64,
}

impl NgramMatch {
    pub fn ratio(&self) -> Option<f64> {
        (self.total > 0).then(|| self.matched as f64 / self.total as f64)
    }
}

impl std::ops::Add for NgramMatch {
    type Output = NgramMatch;

    fn add(self, rhs: Self) -> Self {
        NgramMatch {
            matched: self.matched + rhs.matched,
            total: self.total + rhs.total,
        }
    }
}

fn ngram_counts<T: std::hash::Hash + Eq>(tokens: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_default() += 1;
        }
    }
    counts
}

fn sentence_match<T: std::hash::Hash + Eq>(hyp: &[T], reference: &[T], n: usize) -> NgramMatch {
    let hyp_counts = ngram_counts(hyp, n);
    let ref_counts = ngram_counts(reference, n);
    let matched = hyp_counts
        .iter()
        .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    NgramMatch {
        matched,
        total: hyp.len().saturating_sub(n - 1) as u64,
    }
}

fn check_aligned<A, B>(hyps: &[A], refs: &[B]) -> Result<()> {
    if hyps.len() != refs.len() {
        return Err(Error::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(Error::EmptyCorpus("hypothesis"));
    }
    Ok(())
}

/// Corpus-level clipped n-gram matches of order `n`.
pub fn modified_precision<S: AsRef<str> + Sync>(
    hyps: &[Vec<S>],
    refs: &[Vec<S>],
    n: usize,
) -> Result<NgramMatch> {
    if n < 1 {
        return Err(Error::InvalidParameter("n-gram order must be at least 1".into()));
    }
    check_aligned(hyps, refs)?;
    Ok(hyps
        .par_iter()
        .zip(refs)
        .map(|(h, r)| {
            let h: Vec<&str> = h.iter().map(AsRef::as_ref).collect();
            let r: Vec<&str> = r.iter().map(AsRef::as_ref).collect();
            sentence_match(&h, &r, n)
        })
        .reduce(NgramMatch::default, |a, b| a + b))
}

/// 1 when the hypothesis is at least as long as the reference, otherwise
/// `exp(1 - ref_len / hyp_len)`; an empty hypothesis gets 0.
pub fn brevity_penalty(hyp_len: u64, ref_len: u64) -> f64 {
    if hyp_len >= ref_len {
        1.0
    } else if hyp_len == 0 {
        0.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    /// Plain BLEU.
    #[default]
    None,
    /// `(m + 1) / (t + 1)` for orders 2 and up.
    AddOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BleuConfig {
    pub max_n: usize,
    /// Fold case before counting.
    pub lowercase: bool,
    pub smoothing: Smoothing,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_n: 4,
            lowercase: false,
            smoothing: Smoothing::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub precisions: Vec<NgramMatch>,
    pub bp: f64,
    /// In `[0, 100]`.
    pub score: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
    pub lowercase: bool,
    pub smoothing: Smoothing,
    pub tokenizer: String,
    /// Set when the score was forced to 0 because an order had no n-grams.
    pub diagnostic: Option<String>,
}

impl BleuReport {
    pub fn length_ratio(&self) -> f64 {
        if self.ref_len == 0 {
            0.0
        } else {
            self.hyp_len as f64 / self.ref_len as f64
        }
    }

    /// Key/value text block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "BLEU = {:.2}", self.score).unwrap();
        let fractions: Vec<String> = self
            .precisions
            .iter()
            .map(|p| format!("{}/{}", p.matched, p.total))
            .collect();
        writeln!(out, "precisions = {}", fractions.join(" ")).unwrap();
        writeln!(out, "bp = {:.4}", self.bp).unwrap();
        writeln!(out, "ratio = {:.4}", self.length_ratio()).unwrap();
        writeln!(out, "hyp_len = {}", self.hyp_len).unwrap();
        writeln!(out, "ref_len = {}", self.ref_len).unwrap();
        writeln!(out, "lowercase = {}", self.lowercase).unwrap();
        let smoothing = match self.smoothing {
            Smoothing::None => "none",
            Smoothing::AddOne => "add-one (SMOOTHED)",
        };
        writeln!(out, "smoothing = {smoothing}").unwrap();
        writeln!(out, "tokenizer = {}", self.tokenizer).unwrap();
        if let Some(d) = &self.diagnostic {
            writeln!(out, "diagnostic = {d}").unwrap();
        }
        out
    }

    /// Machine-readable record; the score is rounded to 2 decimals.
    pub fn to_json(&self) -> String {
        let record = serde_json::json!({
            "score": (self.score * 100.0).round() / 100.0,
            "precisions": self.precisions.iter().map(|p| format!("{}/{}", p.matched, p.total)).collect::<Vec<_>>(),
            "bp": self.bp,
            "length_ratio": self.length_ratio(),
            "hyp_len": self.hyp_len,
            "ref_len": self.ref_len,
            "lowercase": self.lowercase,
            "smoothing": self.smoothing,
            "tokenizer": self.tokenizer,
            "diagnostic": self.diagnostic,
        });
        serde_json::to_string_pretty(&record).unwrap() + "\n"
    }
}

/// Corpus BLEU over tokenized, aligned hypotheses and references.
pub fn corpus_bleu<S: AsRef<str> + Sync>(hyps: &[Vec<S>], refs: &[Vec<S>], config: &BleuConfig) -> Result<BleuReport> {
    if config.max_n < 1 {
        return Err(Error::InvalidParameter("max_n must be at least 1".into()));
    }
    check_aligned(hyps, refs)?;
    fn prepare<S: AsRef<str>>(s: &S, lowercase: bool) -> Cow<'_, str> {
        if lowercase {
            Cow::Owned(s.as_ref().to_lowercase())
        } else {
            Cow::Borrowed(s.as_ref())
        }
    }
    let lowercase = config.lowercase;
    let max_n = config.max_n;
    let (precisions, hyp_len, ref_len) = hyps
        .par_iter()
        .zip(refs)
        .map(|(h, r)| {
            let h: Vec<Cow<str>> = h.iter().map(|t| prepare(t, lowercase)).collect();
            let r: Vec<Cow<str>> = r.iter().map(|t| prepare(t, lowercase)).collect();
            let per_order: Vec<NgramMatch> = (1..=max_n).map(|n| sentence_match(&h, &r, n)).collect();
            (per_order, h.len() as u64, r.len() as u64)
        })
        .reduce(
            || (vec![NgramMatch::default(); max_n], 0, 0),
            |(pa, ha, ra), (pb, hb, rb)| {
                (pa.into_iter().zip(pb).map(|(a, b)| a + b).collect(), ha + hb, ra + rb)
            },
        );

    let bp = brevity_penalty(hyp_len, ref_len);
    let mut diagnostic = None;
    let mut log_sum = 0.0;
    for (i, p) in precisions.iter().enumerate() {
        let n = i + 1;
        if p.total == 0 {
            diagnostic = Some(format!("no {n}-grams in the hypotheses; BLEU undefined, reported as 0"));
            break;
        }
        let (m, t) = match config.smoothing {
            Smoothing::AddOne if n > 1 => (p.matched + 1, p.total + 1),
            _ => (p.matched, p.total),
        };
        if m == 0 {
            log_sum = f64::NEG_INFINITY;
            break;
        }
        log_sum += (m as f64 / t as f64).ln();
    }
    let score = if diagnostic.is_some() || log_sum == f64::NEG_INFINITY {
        0.0
    } else {
        (100.0 * bp * (log_sum / max_n as f64).exp()).clamp(0.0, 100.0)
    };
    Ok(BleuReport {
        precisions,
        bp,
        score,
        hyp_len,
        ref_len,
        lowercase: config.lowercase,
        smoothing: config.smoothing,
        tokenizer: TOKENIZER_VERSION.to_string(),
        diagnostic,
    })
}
