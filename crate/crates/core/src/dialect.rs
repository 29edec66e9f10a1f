//! Binary MSA vs dialectal Arabic sentence classifier: multinomial naive
//! Bayes over character trigrams with add-one smoothing.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::Normalizer;

pub const DEFAULT_ORDER: usize = 3;
pub const SMOOTHING_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variety {
    #[serde(rename = "MSA")]
    Msa,
    #[serde(rename = "DA")]
    Da,
}

impl Variety {
    fn slot(self) -> usize {
        match self {
            Variety::Msa => 0,
            Variety::Da => 1,
        }
    }
}

impl fmt::Display for Variety {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variety::Msa => "MSA",
            Variety::Da => "DA",
        })
    }
}

impl FromStr for Variety {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "MSA" | "msa" => Ok(Variety::Msa),
            "DA" | "da" => Ok(Variety::Da),
            _ => Err(Error::InvalidParameter(format!("unknown label `{s}` (expected MSA or DA)"))),
        }
    }
}

/// Character n-grams of the normalized sentence, padded with one space on
/// each side and with whitespace runs collapsed.
pub fn char_ngrams(text: &str, order: usize, norm: &Normalizer) -> Vec<String> {
    let normalized = norm.normalize(text);
    let mut padded: Vec<char> = vec![' '];
    for (i, word) in normalized.split_whitespace().enumerate() {
        if i > 0 {
            padded.push(' ');
        }
        padded.extend(word.chars());
    }
    padded.push(' ');
    if padded.len() < order {
        return Vec::new();
    }
    padded.windows(order).map(|w| w.iter().collect()).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct ClassCounts {
    sentences: u64,
    grams: HashMap<String, u64>,
    total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DialectModel {
    order: usize,
    classes: [ClassCounts; 2],
    vocabulary: usize,
    normalizer: Normalizer,
}

impl DialectModel {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Class prior; the two priors sum to 1.
    pub fn prior(&self, class: Variety) -> f64 {
        let n = self.classes[0].sentences + self.classes[1].sentences;
        self.classes[class.slot()].sentences as f64 / n as f64
    }

    fn log_prob(&self, class: Variety, gram: &str) -> f64 {
        let c = &self.classes[class.slot()];
        let count = c.grams.get(gram).copied().unwrap_or(0) as f64;
        ((count + SMOOTHING_ALPHA) / (c.total as f64 + SMOOTHING_ALPHA * self.vocabulary as f64)).ln()
    }

    /// Class-prefixed count table:
    /// `#order\t3`, `#sentences\t<class>\t<n>`, then `<class>\t<ngram>\t<count>`.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("#order\t{}\n", self.order);
        for class in [Variety::Msa, Variety::Da] {
            writeln!(out, "#sentences\t{class}\t{}", self.classes[class.slot()].sentences).unwrap();
        }
        for class in [Variety::Msa, Variety::Da] {
            let sorted: BTreeMap<&String, &u64> = self.classes[class.slot()].grams.iter().collect();
            for (gram, count) in sorted {
                writeln!(out, "{class}\t{gram}\t{count}").unwrap();
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut order = None;
        let mut classes: [ClassCounts; 2] = Default::default();
        for (i, line) in text.lines().enumerate() {
            let bad = |reason: &str| Error::ModelFormat {
                line: i + 1,
                reason: reason.to_string(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                ["#order", n] => order = Some(n.parse::<usize>().map_err(|_| bad("bad order"))?),
                ["#sentences", class, n] => {
                    let class: Variety = class.parse()?;
                    classes[class.slot()].sentences = n.parse().map_err(|_| bad("bad sentence count"))?;
                }
                [class, gram, n] => {
                    let class: Variety = class.parse()?;
                    let n: u64 = n.parse().map_err(|_| bad("bad count"))?;
                    let c = &mut classes[class.slot()];
                    c.total += n;
                    c.grams.insert(gram.to_string(), n);
                }
                _ => return Err(bad("unrecognized line")),
            }
        }
        let order = order.ok_or_else(|| Error::ModelFormat {
            line: 1,
            reason: "missing #order line".into(),
        })?;
        check_classes(&classes)?;
        Ok(Self::assemble(order, classes, Normalizer::default()))
    }

    fn assemble(order: usize, classes: [ClassCounts; 2], normalizer: Normalizer) -> Self {
        let vocabulary = classes[0]
            .grams
            .keys()
            .chain(classes[1].grams.keys())
            .collect::<HashSet<_>>()
            .len();
        DialectModel {
            order,
            classes,
            vocabulary,
            normalizer,
        }
    }
}

fn check_classes(classes: &[ClassCounts; 2]) -> Result<()> {
    match (classes[0].sentences, classes[1].sentences) {
        (0, 0) => Err(Error::EmptyCorpus("dialect training")),
        (_, 0) => Err(Error::SingleClass("MSA")),
        (0, _) => Err(Error::SingleClass("DA")),
        _ => Ok(()),
    }
}

/// Trains on `(text, label)` pairs.
pub fn train_dialect_classifier<I, S>(labeled: I) -> Result<DialectModel>
where
    I: IntoIterator<Item = (S, Variety)>,
    S: AsRef<str>,
{
    train_with(labeled, DEFAULT_ORDER, Normalizer::default())
}

pub fn train_with<I, S>(labeled: I, order: usize, normalizer: Normalizer) -> Result<DialectModel>
where
    I: IntoIterator<Item = (S, Variety)>,
    S: AsRef<str>,
{
    if order == 0 {
        return Err(Error::InvalidParameter("n-gram order must be at least 1".into()));
    }
    let mut classes: [ClassCounts; 2] = Default::default();
    for (text, label) in labeled {
        let c = &mut classes[label.slot()];
        c.sentences += 1;
        for gram in char_ngrams(text.as_ref(), order, &normalizer) {
            *c.grams.entry(gram).or_default() += 1;
            c.total += 1;
        }
    }
    check_classes(&classes)?;
    Ok(DialectModel::assemble(order, classes, normalizer))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: Variety,
    /// `log P(DA | x) - log P(MSA | x)`; 0 means a tie.
    pub log_odds: f64,
}

/// Highest-posterior label; ties go to MSA.
pub fn classify(model: &DialectModel, sentence: &str) -> Classification {
    let mut log_odds = model.prior(Variety::Da).ln() - model.prior(Variety::Msa).ln();
    for gram in char_ngrams(sentence, model.order, &model.normalizer) {
        log_odds += model.log_prob(Variety::Da, &gram) - model.log_prob(Variety::Msa, &gram);
    }
    let label = if log_odds > 0.0 { Variety::Da } else { Variety::Msa };
    Classification { label, log_odds }
}

/// Share of sentences per label. Percentages are kept in hundredths of a
/// percent: MSA is rounded half-up and DA takes the remainder, so the two
/// always sum to exactly 100.00.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub size: u64,
    pub msa: u64,
    pub da: u64,
    msa_hundredths: u64,
}

impl DistributionReport {
    pub fn from_counts(msa: u64, da: u64) -> Result<Self> {
        let size = msa + da;
        if size == 0 {
            return Err(Error::EmptyCorpus("distribution"));
        }
        let msa_hundredths = (2 * 10_000 * msa + size) / (2 * size);
        Ok(DistributionReport {
            size,
            msa,
            da,
            msa_hundredths,
        })
    }

    pub fn msa_percent(&self) -> f64 {
        self.msa_hundredths as f64 / 100.0
    }

    pub fn da_percent(&self) -> f64 {
        (10_000 - self.msa_hundredths) as f64 / 100.0
    }

    pub fn to_text(&self) -> String {
        format!(
            "size = {}\nmsa = {} ({:.2}%)\nda = {} ({:.2}%)\n",
            self.size,
            self.msa,
            self.msa_percent(),
            self.da,
            self.da_percent()
        )
    }
}

/// Classifies every sentence of `corpus` and tallies the labels.
pub fn distribution_report<I, S>(model: &DialectModel, corpus: I) -> Result<DistributionReport>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let (mut msa, mut da) = (0, 0);
    for sentence in corpus {
        match classify(model, sentence.as_ref()).label {
            Variety::Msa => msa += 1,
            Variety::Da => da += 1,
        }
    }
    DistributionReport::from_counts(msa, da)
}

/// A published distribution row kept for comparison; not something this
/// classifier is expected to reproduce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceDistribution {
    pub dataset: &'static str,
    pub size: u64,
    pub msa_percent: f64,
    pub da_percent: f64,
}

pub const REFERENCE_DISTRIBUTIONS: [ReferenceDistribution; 2] = [
    ReferenceDistribution {
        dataset: "DA-Dev",
        size: 6_164,
        msa_percent: 18.36,
        da_percent: 81.64,
    },
    ReferenceDistribution {
        dataset: "Official Test",
        size: 6_500,
        msa_percent: 72.31,
        da_percent: 27.69,
    },
];

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> DialectModel {
        train_dialect_classifier([
            ("ذهب الولد", Variety::Msa),
            ("ذهب الرجل", Variety::Msa),
            ("عايز ايه", Variety::Da),
        ])
        .unwrap()
    }

    #[test]
    fn trigrams_are_padded() {
        let grams = char_ngrams("ab  c", 3, &Normalizer::default());
        assert_eq!(grams, [" ab", "ab ", "b c", " c "]);
        assert!(char_ngrams("", 3, &Normalizer::default()).is_empty());
    }

    #[test]
    fn da_only_trigrams_classify_as_da() {
        let model = toy();
        let c = classify(&model, "عايز");
        assert_eq!(c.label, Variety::Da);
        assert!(c.log_odds > 0.0);
    }

    #[test]
    fn hand_computed_posterior() {
        let model = toy();
        // MSA: 2 sentences, 18 trigrams; DA: 1 sentence, 8 trigrams
        let msa_total = char_ngrams("ذهب الولد", 3, &Normalizer::default()).len()
            + char_ngrams("ذهب الرجل", 3, &Normalizer::default()).len();
        assert_eq!(msa_total, 18);
        let vocab = model.vocabulary as f64;
        let grams = char_ngrams("عايز", 3, &Normalizer::default());
        assert_eq!(grams.len(), 4);
        // every trigram of "عايز" occurs once in the DA text and never in MSA
        let expected = (1.0f64 / 3.0).ln() - (2.0f64 / 3.0).ln()
            + 4.0 * ((2.0 / (8.0 + vocab)).ln() - (1.0 / (18.0 + vocab)).ln());
        assert!((classify(&model, "عايز").log_odds - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_sentence_follows_prior() {
        let model = toy();
        assert_eq!(classify(&model, "").label, Variety::Msa);
        let da_heavy = train_dialect_classifier([("a", Variety::Msa), ("b", Variety::Da), ("c", Variety::Da)]).unwrap();
        assert_eq!(classify(&da_heavy, "").label, Variety::Da);
    }

    #[test]
    fn tie_goes_to_msa() {
        let model = train_dialect_classifier([("x", Variety::Msa), ("x", Variety::Da)]).unwrap();
        let c = classify(&model, "x");
        assert_eq!(c.log_odds, 0.0);
        assert_eq!(c.label, Variety::Msa);
    }

    #[test]
    fn training_errors() {
        assert!(matches!(
            train_dialect_classifier(Vec::<(&str, Variety)>::new()),
            Err(Error::EmptyCorpus(_))
        ));
        assert!(matches!(
            train_dialect_classifier([("a", Variety::Msa)]),
            Err(Error::SingleClass(_))
        ));
    }

    #[test]
    fn deterministic_and_priors_sum_to_one() {
        let model = toy();
        assert_eq!(classify(&model, "ذهب ايه"), classify(&model, "ذهب ايه"));
        assert!((model.prior(Variety::Msa) + model.prior(Variety::Da) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distribution_arithmetic() {
        let r = DistributionReport::from_counts(3, 1).unwrap();
        assert_eq!((r.msa_percent(), r.da_percent()), (75.0, 25.0));
        let r = DistributionReport::from_counts(4, 0).unwrap();
        assert_eq!((r.msa_percent(), r.da_percent()), (100.0, 0.0));
        // 1/3 = 33.333..% -> 33.33 + 66.67
        let r = DistributionReport::from_counts(1, 2).unwrap();
        assert_eq!(r.to_text(), "size = 3\nmsa = 1 (33.33%)\nda = 2 (66.67%)\n");
        // half-up: 1/8 = 12.5% exactly; 1/16 = 6.25%; 1/1600 = 0.0625% -> 0.06
        assert_eq!(DistributionReport::from_counts(1, 1599).unwrap().msa_percent(), 0.06);
        assert_eq!(DistributionReport::from_counts(1, 799).unwrap().msa_percent(), 0.13);
        assert!(DistributionReport::from_counts(0, 0).is_err());
    }

    #[test]
    fn all_msa_corpus() {
        let model = toy();
        let r = distribution_report(&model, ["ذهب الولد", "ذهب الرجل"]).unwrap();
        assert_eq!((r.msa_percent(), r.da_percent()), (100.0, 0.0));
    }

    #[test]
    fn file_round_trip() {
        let model = toy();
        let parsed = DialectModel::parse(&model.to_file_string()).unwrap();
        assert_eq!(parsed, model);
    }

    #[test]
    fn reference_rows_sum_to_100() {
        for row in REFERENCE_DISTRIBUTIONS {
            assert!((row.msa_percent + row.da_percent - 100.0).abs() < 1e-9);
        }
    }
}
