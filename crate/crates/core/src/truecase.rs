//! Unigram truecaser with separate sentence-initial counts.
//!
//! A capital at the start of a sentence says little about a word's natural
//! casing, so forms are chosen from non-initial evidence first and fall back
//! to all positions only when a word was never seen mid-sentence.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FormCounts {
    pub non_initial: u64,
    pub initial: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TruecaseModel {
    forms: HashMap<String, BTreeMap<String, FormCounts>>,
}

impl TruecaseModel {
    pub fn forms(&self, lower: &str) -> Option<&BTreeMap<String, FormCounts>> {
        self.forms.get(lower)
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    /// Adds counts from one tokenized sentence.
    pub fn observe<S: AsRef<str>>(&mut self, sentence: &[S]) {
        for (i, token) in sentence.iter().enumerate() {
            let form = token.as_ref();
            let counts = self
                .forms
                .entry(form.to_lowercase())
                .or_default()
                .entry(form.to_string())
                .or_default();
            if i == 0 {
                counts.initial += 1;
            } else {
                counts.non_initial += 1;
            }
        }
    }

    /// Preferred surface form for a lowercased token.
    pub fn best_form(&self, lower: &str) -> Option<&str> {
        let forms = self.forms.get(lower)?;
        let by_non_initial = forms.values().any(|c| c.non_initial > 0);
        let score = |c: &FormCounts| {
            if by_non_initial {
                c.non_initial
            } else {
                c.non_initial + c.initial
            }
        };
        // BTreeMap iterates forms in ascending order, so keeping the first
        // maximum breaks ties toward the lexicographically smallest form
        let mut best: Option<(&String, u64)> = None;
        for (form, counts) in forms {
            let s = score(counts);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((form, s));
            }
        }
        best.map(|(f, _)| f.as_str())
    }

    /// `<lower>\t<form>\t<non_initial>\t<initial>` per line, sorted.
    pub fn to_file_string(&self) -> String {
        let sorted: BTreeMap<&String, &BTreeMap<String, FormCounts>> = self.forms.iter().collect();
        let mut out = String::new();
        for (lower, forms) in sorted {
            for (form, c) in forms {
                writeln!(out, "{lower}\t{form}\t{}\t{}", c.non_initial, c.initial).unwrap();
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut model = TruecaseModel::default();
        for (i, line) in text.lines().enumerate() {
            let bad = |reason: &str| Error::ModelFormat {
                line: i + 1,
                reason: reason.to_string(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(bad("expected 4 tab-separated columns"));
            }
            if cols[1].to_lowercase() != cols[0] {
                return Err(bad("form does not lowercase to its key"));
            }
            let non_initial = cols[2].parse().map_err(|_| bad("bad non-initial count"))?;
            let initial = cols[3].parse().map_err(|_| bad("bad initial count"))?;
            model
                .forms
                .entry(cols[0].to_string())
                .or_default()
                .insert(cols[1].to_string(), FormCounts { non_initial, initial });
        }
        Ok(model)
    }
}

/// Counts every surface form of every token over a cased, tokenized corpus.
pub fn train_truecaser<I, T, S>(sentences: I) -> Result<TruecaseModel>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[S]>,
    S: AsRef<str>,
{
    let mut model = TruecaseModel::default();
    for sentence in sentences {
        model.observe(sentence.as_ref());
    }
    if model.is_empty() {
        return Err(Error::EmptyCorpus("truecasing training"));
    }
    Ok(model)
}

/// Restores casing token by token. Unknown tokens pass through.
pub fn apply_truecase<S: AsRef<str>>(model: &TruecaseModel, sentence: &[S]) -> Vec<String> {
    sentence
        .iter()
        .map(|t| {
            let t = t.as_ref();
            model
                .best_form(&t.to_lowercase())
                .unwrap_or(t)
                .to_string()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentences(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(String::from).collect())
            .collect()
    }

    fn counts(non_initial: u64, initial: u64) -> FormCounts {
        FormCounts { non_initial, initial }
    }

    #[test]
    fn counts_initial_separately() {
        let model = train_truecaser(sentences(&["Cairo is big .", "I saw Cairo ."])).unwrap();
        assert_eq!(model.forms("cairo").unwrap()["Cairo"], counts(1, 1));
        assert_eq!(model.forms("i").unwrap()["I"], counts(0, 1));
        assert_eq!(model.forms("is").unwrap()["is"], counts(1, 0));
        assert_eq!(model.forms("cairo").unwrap().len(), 1);
    }

    #[test]
    fn restores_case() {
        let model = train_truecaser(sentences(&["Cairo is big .", "I saw Cairo ."])).unwrap();
        assert_eq!(apply_truecase(&model, &["cairo", "is", "big"]), ["Cairo", "is", "big"]);
        assert_eq!(apply_truecase(&model, &["zzz"]), ["zzz"]);
        // only sentence-initial evidence: fall back to it
        assert_eq!(apply_truecase(&model, &["i"]), ["I"]);
    }

    #[test]
    fn initial_capital_does_not_outvote_mid_sentence() {
        let model = train_truecaser(sentences(&["The cat", "The dog", "The end", "see the cat"])).unwrap();
        assert_eq!(model.best_form("the"), Some("the"));
    }

    #[test]
    fn ties_pick_smallest_form() {
        let model = train_truecaser(sentences(&["x Apple", "x apple"])).unwrap();
        assert_eq!(model.best_form("apple"), Some("Apple"));
    }

    #[test]
    fn lowercase_model_is_identity() {
        let model = train_truecaser(sentences(&["a b c", "c d e"])).unwrap();
        for lower in ["a", "b", "c", "d", "e"] {
            assert_eq!(model.forms(lower).unwrap().keys().collect::<Vec<_>>(), [lower]);
        }
        assert_eq!(apply_truecase(&model, &["e", "d", "q"]), ["e", "d", "q"]);
    }

    #[test]
    fn doubling_counts_keeps_argmax() {
        let data = sentences(&["The Nile is long", "the nile", "Nile river is here"]);
        let once = train_truecaser(data.clone()).unwrap();
        let twice = train_truecaser(data.iter().chain(data.iter())).unwrap();
        assert_eq!(twice.forms("nile").unwrap()["Nile"].non_initial, 2 * once.forms("nile").unwrap()["Nile"].non_initial);
        for key in ["the", "nile", "is", "long", "river", "here"] {
            assert_eq!(once.best_form(key), twice.best_form(key));
        }
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(train_truecaser(Vec::<Vec<String>>::new()).is_err());
    }

    #[test]
    fn file_round_trip() {
        let model = train_truecaser(sentences(&["Cairo is big .", "I saw Cairo ."])).unwrap();
        let text = model.to_file_string();
        assert!(text.contains("cairo\tCairo\t1\t1\n"));
        assert_eq!(TruecaseModel::parse(&text).unwrap(), model);
        assert!(TruecaseModel::parse("a\tB\t1\t0\n").is_err());
    }
}
