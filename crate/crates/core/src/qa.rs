//! Two-step quality gate for bitext.
//!
//! 1. Similarity band: a cross-lingual similarity score per pair, keeping
//!    pairs inside `[lo, hi]`. Scores below `lo` are non-translations,
//!    scores above `hi` are copies.
//! 2. Containment: the share of unique word n-grams one side has in common
//!    with the other. Pairs above the threshold carry copied text.
//!
//! The similarity model itself is pluggable. `Scorer::Sidecar` reads
//! precomputed sentence embeddings, `Scorer::Lexical` is a token-overlap
//! surrogate that needs no model.

use std::collections::HashSet;
use std::fs::File;
use std::hash::Hash;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::SentencePair;
use crate::error::{Error, Result};
use crate::normalize::Normalizer;

/// A similarity in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(SimilarityScore(value))
        } else {
            Err(Error::InvalidParameter(format!("similarity {value} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Inclusive similarity band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBand")]
pub struct BandConfig {
    lo: f64,
    hi: f64,
}

#[derive(Deserialize)]
struct RawBand {
    lo: f64,
    hi: f64,
}

impl TryFrom<RawBand> for BandConfig {
    type Error = Error;

    fn try_from(raw: RawBand) -> Result<Self> {
        BandConfig::new(raw.lo, raw.hi)
    }
}

impl BandConfig {
    pub const DEFAULT_LO: f64 = 0.30;
    pub const DEFAULT_HI: f64 = 0.99;

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "similarity band requires 0 <= lo < hi <= 1, got [{lo}, {hi}]"
            )));
        }
        Ok(BandConfig { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn classify(&self, score: SimilarityScore) -> BandVerdict {
        if score.0 < self.lo {
            BandVerdict::Low
        } else if score.0 > self.hi {
            BandVerdict::High
        } else {
            BandVerdict::Kept
        }
    }
}

impl Default for BandConfig {
    fn default() -> Self {
        BandConfig {
            lo: Self::DEFAULT_LO,
            hi: Self::DEFAULT_HI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandVerdict {
    Kept,
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandPartition<T> {
    pub kept: Vec<T>,
    pub removed_low: Vec<T>,
    pub removed_high: Vec<T>,
}

/// Sorts scored items into the three band buckets, preserving input order
/// within each bucket.
pub fn band_filter<T, I>(scored: I, band: &BandConfig) -> BandPartition<T>
where
    I: IntoIterator<Item = (T, SimilarityScore)>,
{
    let mut out = BandPartition {
        kept: Vec::new(),
        removed_low: Vec::new(),
        removed_high: Vec::new(),
    };
    for (item, score) in scored {
        match band.classify(score) {
            BandVerdict::Kept => out.kept.push(item),
            BandVerdict::Low => out.removed_low.push(item),
            BandVerdict::High => out.removed_high.push(item),
        }
    }
    out
}

/// Cosine similarity mapped from `[-1, 1]` onto `[0, 1]` via `(c + 1) / 2`.
pub fn cosine_score(a: &[f64], b: &[f64]) -> Result<SimilarityScore> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "vector dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidParameter("zero vector".into()));
    }
    let cosine = (dot / (na * nb)).clamp(-1.0, 1.0);
    SimilarityScore::new((cosine + 1.0) / 2.0)
}

/// `|set(src) ∩ set(tgt)| / min(|set(src)|, |set(tgt)|)`, 0 when either
/// side is empty.
pub fn lexical_overlap<T: Eq + Hash>(src: &[T], tgt: &[T]) -> SimilarityScore {
    let s: HashSet<&T> = src.iter().collect();
    let t: HashSet<&T> = tgt.iter().collect();
    let denom = s.len().min(t.len());
    if denom == 0 {
        return SimilarityScore(0.0);
    }
    let shared = s.intersection(&t).count();
    SimilarityScore(shared as f64 / denom as f64)
}

/// Which similarity backend the band stage uses.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScorerSpec {
    /// Line-aligned vector files, one row per pair index.
    SidecarEmbedding { src_vectors: PathBuf, tgt_vectors: PathBuf },
    /// Token overlap on normalized text; no model needed.
    #[default]
    LexicalOverlap,
}

/// Reads one vector per line (space-separated decimals). All rows of a file
/// must share one dimension and be finite.
pub struct VectorReader {
    reader: Box<dyn BufRead + Send>,
    line: u64,
    dim: Option<usize>,
    buf: String,
}

impl VectorReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(Box::new(BufReader::new(file))))
    }

    pub fn new(reader: Box<dyn BufRead + Send>) -> Self {
        VectorReader {
            reader,
            line: 0,
            dim: None,
            buf: String::new(),
        }
    }

    /// Skips ahead to row `index` and parses it. Rows can only be visited in
    /// increasing order.
    pub fn row(&mut self, index: u64) -> Result<Vec<f64>> {
        if index < self.line {
            return Err(Error::MissingSidecarRow { index });
        }
        loop {
            self.buf.clear();
            if self.reader.read_line(&mut self.buf)? == 0 {
                return Err(Error::MissingSidecarRow { index });
            }
            let line = self.line;
            self.line += 1;
            if line == index {
                return self.parse(line);
            }
        }
    }

    fn parse(&mut self, line: u64) -> Result<Vec<f64>> {
        let values = self
            .buf
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Error::Sidecar {
                line,
                reason: "non-numeric or non-finite value".into(),
            })?;
        if values.is_empty() || values.iter().all(|&v| v == 0.0) {
            return Err(Error::Sidecar {
                line,
                reason: "zero vector".into(),
            });
        }
        match self.dim {
            None => self.dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::Sidecar {
                    line,
                    reason: format!("dimension {} differs from {d}", values.len()),
                })
            }
            _ => {}
        }
        Ok(values)
    }
}

pub enum Scorer {
    Lexical(Normalizer),
    Sidecar { src: VectorReader, tgt: VectorReader },
}

impl Scorer {
    pub fn open(spec: &ScorerSpec, normalizer: &Normalizer) -> Result<Self> {
        Ok(match spec {
            ScorerSpec::LexicalOverlap => Scorer::Lexical(normalizer.clone()),
            ScorerSpec::SidecarEmbedding {
                src_vectors,
                tgt_vectors,
            } => Scorer::Sidecar {
                src: VectorReader::open(src_vectors)?,
                tgt: VectorReader::open(tgt_vectors)?,
            },
        })
    }

    pub fn score_pair(&mut self, pair: &SentencePair) -> Result<SimilarityScore> {
        match self {
            Scorer::Lexical(norm) => Ok(lexical_overlap(&norm.tokens(&pair.src), &norm.tokens(&pair.tgt))),
            Scorer::Sidecar { src, tgt } => {
                let (a, b) = (src.row(pair.index)?, tgt.row(pair.index)?);
                cosine_score(&a, &b).map_err(|e| Error::Sidecar {
                    line: pair.index,
                    reason: e.to_string(),
                })
            }
        }
    }

    /// Scores a batch in input order. Pairs must arrive with increasing
    /// indices across calls when reading sidecar vectors.
    pub fn score_batch(&mut self, pairs: &[SentencePair]) -> Result<Vec<SimilarityScore>> {
        match self {
            Scorer::Lexical(norm) => {
                let norm = &*norm;
                Ok(pairs
                    .par_iter()
                    .map(|p| lexical_overlap(&norm.tokens(&p.src), &norm.tokens(&p.tgt)))
                    .collect())
            }
            Scorer::Sidecar { src, tgt } => {
                let mut rows = Vec::with_capacity(pairs.len());
                for pair in pairs {
                    rows.push((pair.index, src.row(pair.index)?, tgt.row(pair.index)?));
                }
                rows.par_iter()
                    .map(|(index, a, b)| {
                        cosine_score(a, b).map_err(|e| Error::Sidecar {
                            line: *index,
                            reason: e.to_string(),
                        })
                    })
                    .collect()
            }
        }
    }
}

/// Containment of unique word n-grams between the two sides of a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapRatio {
    pub value: f64,
    /// Order actually used after the short-sentence fallback.
    pub order: usize,
    pub shared: usize,
    pub denominator: usize,
}

/// `|G(src) ∩ G(tgt)| / min(|G(src)|, |G(tgt)|)` where `G` is the set of
/// `n`-grams. If a side has fewer than `n` tokens the order drops to the
/// shorter length; an empty side gives 0.
///
/// # Panics
/// If `n == 0`.
pub fn containment_ratio<T: Eq + Hash>(src: &[T], tgt: &[T], n: usize) -> OverlapRatio {
    assert!(n >= 1, "n-gram order must be at least 1");
    let order = n.min(src.len()).min(tgt.len());
    if order == 0 {
        return OverlapRatio {
            value: 0.0,
            order,
            shared: 0,
            denominator: 0,
        };
    }
    let s: HashSet<&[T]> = src.windows(order).collect();
    let t: HashSet<&[T]> = tgt.windows(order).collect();
    let (small, large) = if s.len() <= t.len() { (&s, &t) } else { (&t, &s) };
    let shared = small.iter().filter(|g| large.contains(*g)).count();
    let denominator = small.len();
    OverlapRatio {
        value: shared as f64 / denominator as f64,
        order,
        shared,
        denominator,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawContainment")]
pub struct ContainmentConfig {
    threshold: f64,
    order: usize,
}

#[derive(Deserialize)]
struct RawContainment {
    threshold: f64,
    order: usize,
}

impl TryFrom<RawContainment> for ContainmentConfig {
    type Error = Error;

    fn try_from(raw: RawContainment) -> Result<Self> {
        ContainmentConfig::new(raw.threshold, raw.order)
    }
}

impl ContainmentConfig {
    pub const DEFAULT_THRESHOLD: f64 = 0.75;
    pub const DEFAULT_ORDER: usize = 3;

    pub fn new(threshold: f64, order: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidParameter(format!(
                "containment threshold {threshold} outside [0, 1]"
            )));
        }
        if order == 0 {
            return Err(Error::InvalidParameter("n-gram order must be at least 1".into()));
        }
        Ok(ContainmentConfig { threshold, order })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Strictly above the threshold counts as overlapping.
    pub fn is_overlapping(&self, ratio: &OverlapRatio) -> bool {
        ratio.value > self.threshold
    }
}

impl Default for ContainmentConfig {
    fn default() -> Self {
        ContainmentConfig {
            threshold: Self::DEFAULT_THRESHOLD,
            order: Self::DEFAULT_ORDER,
        }
    }
}

/// Containment ratio of every pair, computed on normalized tokens.
pub fn containment_ratios(pairs: &[SentencePair], order: usize, norm: &Normalizer) -> Vec<OverlapRatio> {
    pairs
        .par_iter()
        .map(|p| containment_ratio(&norm.tokens(&p.src), &norm.tokens(&p.tgt), order))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentPartition {
    pub kept: Vec<SentencePair>,
    pub removed_overlapping: Vec<SentencePair>,
}

pub fn containment_filter(
    pairs: Vec<SentencePair>,
    config: &ContainmentConfig,
    norm: &Normalizer,
) -> ContainmentPartition {
    let ratios = containment_ratios(&pairs, config.order, norm);
    let mut out = ContainmentPartition {
        kept: Vec::new(),
        removed_overlapping: Vec::new(),
    };
    for (pair, ratio) in pairs.into_iter().zip(ratios) {
        if config.is_overlapping(&ratio) {
            out.removed_overlapping.push(pair);
        } else {
            out.kept.push(pair);
        }
    }
    out
}

/// Thresholds 0.30, 0.35, ..., 0.90, the range inspected when choosing the
/// containment cut-off.
pub fn default_sweep_thresholds() -> Vec<f64> {
    (30..=90).step_by(5).map(|pct| pct as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub removed: u64,
}

/// Number of pairs a strict `> threshold` cut would remove, per threshold.
pub fn containment_sweep(ratios: &[OverlapRatio], thresholds: &[f64]) -> Vec<SweepPoint> {
    thresholds
        .iter()
        .map(|&threshold| SweepPoint {
            threshold,
            removed: ratios.iter().filter(|r| r.value > threshold).count() as u64,
        })
        .collect()
}
