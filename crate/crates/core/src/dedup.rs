//! Exact duplicate removal over a pair stream.
//!
//! Keys are canonicalized (NFC, whitespace runs collapsed to one space,
//! ends trimmed) and reduced to 128-bit fingerprints, so memory grows with
//! the number of distinct keys times 16 bytes rather than with text size.
//!
//! The fingerprint set can be split into shards by fingerprint prefix. Each
//! shard owns a disjoint part of the key space and walks its items in input
//! order, so first-occurrence-wins gives the same answer for any shard count.

use std::collections::{HashMap, HashSet};
use std::hash::{BuildHasherDefault, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_128;

use crate::corpus::{nfc, SentencePair};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DedupMode {
    /// Source and target together.
    #[default]
    Pair,
    SrcOnly,
    TgtOnly,
}

impl std::str::FromStr for DedupMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "pair" => Ok(DedupMode::Pair),
            "src-only" | "src" => Ok(DedupMode::SrcOnly),
            "tgt-only" | "tgt" => Ok(DedupMode::TgtOnly),
            _ => Err(crate::Error::InvalidParameter(format!("unknown dedup mode `{s}`"))),
        }
    }
}

fn canonical(text: &str, out: &mut String) {
    let text = nfc(text);
    for (i, word) in text.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(word);
    }
}

/// Canonical key text of `pair` under `mode`.
pub fn canonical_key(pair: &SentencePair, mode: DedupMode) -> String {
    let mut key = String::with_capacity(pair.src.len() + pair.tgt.len() + 1);
    match mode {
        DedupMode::Pair => {
            canonical(&pair.src, &mut key);
            key.push('\t');
            canonical(&pair.tgt, &mut key);
        }
        DedupMode::SrcOnly => canonical(&pair.src, &mut key),
        DedupMode::TgtOnly => canonical(&pair.tgt, &mut key),
    }
    key
}

pub fn fingerprint(key: &str) -> u128 {
    xxh3_128(key.as_bytes())
}

/// Fingerprints are already uniformly mixed; hashing them again is waste.
#[derive(Default)]
struct PassThrough(u64);

impl Hasher for PassThrough {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = self.0.rotate_left(8) ^ u64::from(b);
        }
    }

    fn write_u128(&mut self, n: u128) {
        self.0 = n as u64;
    }
}

type FingerprintSet = HashSet<u128, BuildHasherDefault<PassThrough>>;

#[derive(Default)]
struct Shard {
    seen: FingerprintSet,
    // strict mode: full key texts per fingerprint
    texts: Option<HashMap<u128, Vec<Box<str>>, BuildHasherDefault<PassThrough>>>,
    collisions: u64,
}

impl Shard {
    fn admit(&mut self, fp: u128, key: &str) -> bool {
        match &mut self.texts {
            None => self.seen.insert(fp),
            Some(texts) => {
                let bucket = texts.entry(fp).or_default();
                if bucket.iter().any(|t| &**t == key) {
                    return false;
                }
                if !bucket.is_empty() {
                    self.collisions += 1;
                }
                bucket.push(key.into());
                true
            }
        }
    }

    fn len(&self) -> usize {
        match &self.texts {
            None => self.seen.len(),
            Some(texts) => texts.values().map(Vec::len).sum(),
        }
    }
}

/// First-occurrence-wins duplicate filter.
pub struct Deduplicator {
    mode: DedupMode,
    shards: Vec<Shard>,
}

impl Deduplicator {
    pub fn new(mode: DedupMode) -> Self {
        Self::with_shards(mode, 1)
    }

    pub fn with_shards(mode: DedupMode, shards: usize) -> Self {
        Deduplicator {
            mode,
            shards: (0..shards.max(1)).map(|_| Shard::default()).collect(),
        }
    }

    /// Keep full key texts and compare them on fingerprint hits. Slower and
    /// larger; used to check the fingerprint path.
    pub fn strict(mut self) -> Self {
        for shard in &mut self.shards {
            shard.texts = Some(HashMap::default());
        }
        self
    }

    pub fn mode(&self) -> DedupMode {
        self.mode
    }

    fn shard_of(&self, fp: u128) -> usize {
        ((fp >> 64) as u64 % self.shards.len() as u64) as usize
    }

    /// Returns `true` if `pair` is the first occurrence of its key.
    pub fn admit(&mut self, pair: &SentencePair) -> bool {
        let key = canonical_key(pair, self.mode);
        let fp = fingerprint(&key);
        let shard = self.shard_of(fp);
        self.shards[shard].admit(fp, &key)
    }

    /// Admission decisions for a batch, identical to calling [`admit`] on
    /// each pair in order. Shards run in parallel.
    ///
    /// [`admit`]: Deduplicator::admit
    pub fn admit_batch(&mut self, pairs: &[SentencePair]) -> Vec<bool> {
        let mode = self.mode;
        let strict = self.shards[0].texts.is_some();
        let keyed: Vec<(u128, Option<String>)> = pairs
            .par_iter()
            .map(|p| {
                let key = canonical_key(p, mode);
                (fingerprint(&key), strict.then_some(key))
            })
            .collect();
        if self.shards.len() == 1 {
            let shard = &mut self.shards[0];
            return keyed
                .iter()
                .map(|(fp, key)| shard.admit(*fp, key.as_deref().unwrap_or("")))
                .collect();
        }
        let count = self.shards.len() as u64;
        let decisions: Vec<Vec<(usize, bool)>> = self
            .shards
            .par_iter_mut()
            .enumerate()
            .map(|(id, shard)| {
                keyed
                    .iter()
                    .enumerate()
                    .filter(|(_, (fp, _))| ((fp >> 64) as u64 % count) as usize == id)
                    .map(|(pos, (fp, key))| (pos, shard.admit(*fp, key.as_deref().unwrap_or(""))))
                    .collect()
            })
            .collect();
        let mut out = vec![false; pairs.len()];
        for (pos, keep) in decisions.into_iter().flatten() {
            out[pos] = keep;
        }
        out
    }

    pub fn distinct_keys(&self) -> usize {
        self.shards.iter().map(Shard::len).sum()
    }

    /// Fingerprint collisions seen in strict mode.
    pub fn collisions(&self) -> u64 {
        self.shards.iter().map(|s| s.collisions).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DedupOutcome {
    pub kept: Vec<SentencePair>,
    pub removed: u64,
}

/// Drops every pair whose key was already seen, keeping input order.
pub fn dedup_exact<I>(pairs: I, mode: DedupMode) -> DedupOutcome
where
    I: IntoIterator<Item = SentencePair>,
{
    let mut dedup = Deduplicator::new(mode);
    let mut kept = Vec::new();
    let mut removed = 0;
    for pair in pairs {
        if dedup.admit(&pair) {
            kept.push(pair);
        } else {
            removed += 1;
        }
    }
    DedupOutcome { kept, removed }
}

/// Same result as [`dedup_exact`], with the key space split over `shards`
/// parallel workers.
pub fn dedup_sharded(pairs: Vec<SentencePair>, mode: DedupMode, shards: usize) -> DedupOutcome {
    let mut dedup = Deduplicator::with_shards(mode, shards);
    let keep = dedup.admit_batch(&pairs);
    let removed = keep.iter().filter(|k| !**k).count() as u64;
    let kept = pairs
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect();
    DedupOutcome { kept, removed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(items: &[(&str, &str)]) -> Vec<SentencePair> {
        items
            .iter()
            .enumerate()
            .map(|(i, (s, t))| SentencePair::new(i as u64, *s, *t))
            .collect()
    }

    fn texts(out: &DedupOutcome) -> Vec<(String, String)> {
        out.kept.iter().map(|p| (p.src.clone(), p.tgt.clone())).collect()
    }

    #[test]
    fn pair_mode() {
        let out = dedup_exact(pairs(&[("a", "b"), ("a", "b"), ("c", "d")]), DedupMode::Pair);
        assert_eq!(texts(&out), [("a".into(), "b".into()), ("c".into(), "d".into())]);
        assert_eq!(out.removed, 1);
    }

    #[test]
    fn key_modes() {
        let input = pairs(&[("a", "b"), ("a", "c")]);
        assert_eq!(dedup_exact(input.clone(), DedupMode::Pair).removed, 0);
        let src = dedup_exact(input.clone(), DedupMode::SrcOnly);
        assert_eq!((src.kept.len(), src.removed, src.kept[0].index), (1, 1, 0));
        assert_eq!(dedup_exact(input, DedupMode::TgtOnly).removed, 0);
    }

    #[test]
    fn whitespace_and_nfc_variants_collide() {
        let out = dedup_exact(
            pairs(&[("caf\u{e9}  au lait", "x"), (" cafe\u{301} au\tlait ", "x")]),
            DedupMode::Pair,
        );
        assert_eq!(out.removed, 1);
    }

    #[test]
    fn src_and_tgt_boundary_matters() {
        // "a b" + "c" must differ from "a" + "b c"
        let out = dedup_exact(pairs(&[("a b", "c"), ("a", "b c")]), DedupMode::Pair);
        assert_eq!(out.removed, 0);
    }

    #[test]
    fn strict_mode_agrees() {
        let input = pairs(&[("a", "b"), ("a", "b"), ("c", "d"), ("c", "d"), ("e", "f")]);
        let mut strict = Deduplicator::new(DedupMode::Pair).strict();
        let keep = strict.admit_batch(&input);
        assert_eq!(keep, [true, false, true, false, true]);
        assert_eq!(strict.collisions(), 0);
        assert_eq!(strict.distinct_keys(), 3);
    }

    fn corpus() -> impl Strategy<Value = Vec<SentencePair>> {
        let side = prop::sample::select(vec!["a", "b", "c", "a  ", "d e"]);
        prop::collection::vec((side.clone(), side), 0..60).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (s, t))| SentencePair::new(i as u64, s, t))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn idempotent_and_accounting(input in corpus(), mode in prop::sample::select(vec![DedupMode::Pair, DedupMode::SrcOnly, DedupMode::TgtOnly])) {
            let once = dedup_exact(input.clone(), mode);
            prop_assert_eq!(once.kept.len() as u64 + once.removed, input.len() as u64);
            prop_assert!(once.kept.windows(2).all(|w| w[0].index < w[1].index));
            let twice = dedup_exact(once.kept.clone(), mode);
            prop_assert_eq!(twice.removed, 0);
            prop_assert_eq!(twice.kept, once.kept);
        }

        #[test]
        fn shard_count_independent(input in corpus(), shards in 1usize..9) {
            let one = dedup_exact(input.clone(), DedupMode::Pair);
            let many = dedup_sharded(input, DedupMode::Pair, shards);
            prop_assert_eq!(one, many);
        }
    }
}
