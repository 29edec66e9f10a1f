//! Seeded train/dev carving.
//!
//! Dev membership is drawn by reservoir sampling over stream positions in a
//! single pass, so only the `n_dev` chosen positions are held in memory. A
//! second pass routes each pair to train or dev. Both outputs keep the
//! original relative order.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{read_bitext, BitextLocation, BitextWriter, SentencePair};
use crate::error::{Error, Result};

/// Size of the MSA validation split.
pub const MSA_DEV_SIZE: u64 = 10_000;
/// Size of the dialectal validation split.
pub const DA_DEV_SIZE: u64 = 6_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_dev: u64,
    pub seed: u64,
    #[serde(default = "default_dev_label")]
    pub label_dev: String,
    #[serde(default = "default_train_label")]
    pub label_train: String,
}

fn default_dev_label() -> String {
    "dev".into()
}

fn default_train_label() -> String {
    "train".into()
}

impl SplitSpec {
    pub fn new(n_dev: u64, seed: u64) -> Self {
        SplitSpec {
            n_dev,
            seed,
            label_dev: default_dev_label(),
            label_train: default_train_label(),
        }
    }

    pub fn msa_dev(seed: u64) -> Self {
        SplitSpec {
            label_dev: "msa-dev".into(),
            label_train: "msa-train".into(),
            ..Self::new(MSA_DEV_SIZE, seed)
        }
    }

    pub fn da_dev(seed: u64) -> Self {
        SplitSpec {
            label_dev: "da-dev".into(),
            label_train: "da-train".into(),
            ..Self::new(DA_DEV_SIZE, seed)
        }
    }
}

/// Uniform `k`-subset of stream positions (Algorithm R).
pub struct DevSampler {
    k: u64,
    seen: u64,
    reservoir: Vec<u64>,
    rng: ChaCha8Rng,
}

impl DevSampler {
    pub fn new(k: u64, seed: u64) -> Self {
        DevSampler {
            k,
            seen: 0,
            reservoir: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn observe(&mut self) {
        let i = self.seen;
        if i < self.k {
            self.reservoir.push(i);
        } else {
            let j = self.rng.gen_range(0..=i);
            if j < self.k {
                self.reservoir[j as usize] = i;
            }
        }
        self.seen += 1;
    }

    /// Sorted dev positions. Fails if fewer than `k` items were observed.
    pub fn finish(self) -> Result<DevMembership> {
        if self.k > self.seen {
            return Err(Error::SplitTooLarge {
                n_dev: self.k,
                available: self.seen,
            });
        }
        let mut positions = self.reservoir;
        positions.sort_unstable();
        Ok(DevMembership {
            positions,
            total: self.seen,
        })
    }
}

/// Chosen dev positions over a stream of `total` items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DevMembership {
    positions: Vec<u64>,
    total: u64,
}

impl DevMembership {
    pub fn draw(total: u64, spec: &SplitSpec) -> Result<Self> {
        let mut sampler = DevSampler::new(spec.n_dev, spec.seed);
        for _ in 0..total {
            sampler.observe();
        }
        sampler.finish()
    }

    pub fn is_dev(&self, position: u64) -> bool {
        self.positions.binary_search(&position).is_ok()
    }

    pub fn positions(&self) -> &[u64] {
        &self.positions
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<SentencePair>,
    pub dev: Vec<SentencePair>,
}

/// In-memory split of `pairs`.
pub fn sample_split(pairs: Vec<SentencePair>, spec: &SplitSpec) -> Result<Split> {
    let membership = DevMembership::draw(pairs.len() as u64, spec)?;
    let (dev, train) = pairs
        .into_iter()
        .enumerate()
        .partition(|(pos, _)| membership.is_dev(*pos as u64));
    let strip = |v: Vec<(usize, SentencePair)>| v.into_iter().map(|(_, p)| p).collect();
    Ok(Split {
        train: strip(train),
        dev: strip(dev),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub total: u64,
    pub n_train: u64,
    pub n_dev: u64,
    pub label_train: String,
    pub label_dev: String,
    /// Provenance labels in the order they first appear in the input, which
    /// records how the input was concatenated.
    pub sources: Vec<String>,
}

impl SplitManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

/// Two-pass file split: sample positions, then route pairs.
pub fn split_file(
    input: &BitextLocation,
    spec: &SplitSpec,
    train_out: &BitextLocation,
    dev_out: &BitextLocation,
) -> Result<SplitManifest> {
    let mut sampler = DevSampler::new(spec.n_dev, spec.seed);
    let mut sources: Vec<String> = Vec::new();
    for pair in read_bitext(input)? {
        let pair = pair?;
        if sources.last().map(String::as_str) != Some(&*pair.provenance)
            && !sources.iter().any(|s| **s == *pair.provenance)
        {
            sources.push(pair.provenance.to_string());
        }
        sampler.observe();
    }
    let membership = sampler.finish()?;
    let mut train = BitextWriter::create(train_out)?;
    let mut dev = BitextWriter::create(dev_out)?;
    for (pos, pair) in read_bitext(input)?.enumerate() {
        let pair = pair?;
        if membership.is_dev(pos as u64) {
            dev.write(&pair)?;
        } else {
            train.write(&pair)?;
        }
    }
    Ok(SplitManifest {
        seed: spec.seed,
        total: membership.total(),
        n_train: train.finish()?,
        n_dev: dev.finish()?,
        label_train: spec.label_train.clone(),
        label_dev: spec.label_dev.clone(),
        sources,
    })
}

/// Writes `manifest` as JSON next to the split outputs.
pub fn write_manifest(manifest: &SplitManifest, path: &Path) -> Result<()> {
    std::fs::write(path, manifest.to_json()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn corpus(n: u64) -> Vec<SentencePair> {
        (0..n).map(|i| SentencePair::new(i, format!("s{i}"), format!("t{i}"))).collect()
    }

    fn ids(v: &[SentencePair]) -> Vec<u64> {
        v.iter().map(|p| p.index).collect()
    }

    #[test]
    fn accounting() {
        let split = sample_split(corpus(100), &SplitSpec::new(10, 42)).unwrap();
        assert_eq!((split.dev.len(), split.train.len()), (10, 90));
        let dev: BTreeSet<u64> = ids(&split.dev).into_iter().collect();
        let train: BTreeSet<u64> = ids(&split.train).into_iter().collect();
        assert!(dev.is_disjoint(&train));
        assert_eq!(dev.union(&train).count(), 100);
        assert!(split.dev.windows(2).all(|w| w[0].index < w[1].index));
        assert!(split.train.windows(2).all(|w| w[0].index < w[1].index));
    }

    #[test]
    fn deterministic() {
        let a = sample_split(corpus(100), &SplitSpec::new(10, 42)).unwrap();
        let b = sample_split(corpus(100), &SplitSpec::new(10, 42)).unwrap();
        assert_eq!(a, b);
        let c = sample_split(corpus(100), &SplitSpec::new(10, 43)).unwrap();
        assert_ne!(ids(&a.dev), ids(&c.dev));
    }

    #[test]
    fn zero_dev() {
        let split = sample_split(corpus(5), &SplitSpec::new(0, 1)).unwrap();
        assert!(split.dev.is_empty());
        assert_eq!(split.train, corpus(5));
    }

    #[test]
    fn whole_corpus_as_dev() {
        let split = sample_split(corpus(5), &SplitSpec::new(5, 1)).unwrap();
        assert_eq!(split.dev.len(), 5);
        assert!(split.train.is_empty());
    }

    #[test]
    fn too_many_dev_pairs() {
        let err = sample_split(corpus(3), &SplitSpec::new(4, 1)).unwrap_err();
        assert!(matches!(err, Error::SplitTooLarge { n_dev: 4, available: 3 }));
    }

    #[test]
    fn preset_sizes() {
        assert_eq!(SplitSpec::msa_dev(0).n_dev, 10_000);
        assert_eq!(SplitSpec::da_dev(0).n_dev, 6_000);
    }

    #[test]
    fn file_split_matches_in_memory() {
        let dir = tempfile::tempdir().unwrap();
        let input = BitextLocation::Tsv(dir.path().join("in.tsv"));
        crate::corpus::write_bitext(corpus(50), &input).unwrap();
        let train = BitextLocation::Tsv(dir.path().join("train.tsv"));
        let dev = BitextLocation::Tsv(dir.path().join("dev.tsv"));
        let spec = SplitSpec::new(7, 9);
        let manifest = split_file(&input, &spec, &train, &dev).unwrap();
        assert_eq!((manifest.total, manifest.n_train, manifest.n_dev), (50, 43, 7));
        assert_eq!(manifest.sources, ["in"]);
        let expected = sample_split(corpus(50), &spec).unwrap();
        let dev_read: Vec<_> = read_bitext(&dev).unwrap().map(|p| p.unwrap().src).collect();
        let dev_expected: Vec<_> = expected.dev.iter().map(|p| p.src.clone()).collect();
        assert_eq!(dev_read, dev_expected);
    }
}
