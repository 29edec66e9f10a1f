//! Joint byte-pair-encoding: learning a merge list from token frequencies
//! and segmenting tokens with it.
//!
//! Each token starts as its characters followed by an end-of-word marker.
//! Learning repeatedly merges the most frequent adjacent symbol pair
//! (ties: lexicographically smallest `(first, second)`) until the requested
//! number of merges is reached or no pair occurs at least twice.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const END_OF_WORD: &str = "</w>";
pub const DEFAULT_MERGES: usize = 64_000;
const MIN_PAIR_FREQUENCY: i64 = 2;

/// Token → count over the joint source+target corpus.
pub type FrequencyTable = HashMap<String, u64>;

pub fn count_tokens<I, S>(table: &mut FrequencyTable, tokens: I)
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    for token in tokens {
        let token = token.as_ref();
        match table.get_mut(token) {
            Some(n) => *n += 1,
            None => {
                table.insert(token.to_string(), 1);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    alphabet: BTreeSet<char>,
    /// Extra `key=value` header fields, e.g. what text the model was learned on.
    pub attributes: BTreeMap<String, String>,
}

impl BpeModel {
    pub fn from_merges(merges: Vec<(String, String)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, m) in merges.iter().enumerate() {
            if !seen.insert(m) {
                return Err(Error::ModelFormat {
                    line: i + 2,
                    reason: format!("duplicate merge `{} {}`", m.0, m.1),
                });
            }
        }
        let alphabet = merges
            .iter()
            .flat_map(|(a, b)| [a, b])
            .filter(|s| s.as_str() != END_OF_WORD && s.chars().count() == 1)
            .flat_map(|s| s.chars())
            .collect();
        Ok(BpeModel {
            merges,
            alphabet,
            attributes: BTreeMap::new(),
        })
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn num_merges(&self) -> usize {
        self.merges.len()
    }

    /// Single characters, the end-of-word marker and every merged symbol.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        let mut vocab: BTreeSet<String> = self.alphabet.iter().map(|c| c.to_string()).collect();
        vocab.insert(END_OF_WORD.to_string());
        vocab.extend(self.merges.iter().map(|(a, b)| format!("{a}{b}")));
        vocab
    }

    /// `#bpe v1 merges=<k>[ key=value...]` then one `first second` per line.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("#bpe v1 merges={}", self.merges.len());
        for (k, v) in &self.attributes {
            write!(out, " {k}={v}").unwrap();
        }
        out.push('\n');
        for (a, b) in &self.merges {
            writeln!(out, "{a} {b}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        let mut fields = header.split(' ');
        if fields.next() != Some("#bpe") || fields.next() != Some("v1") {
            return Err(Error::ModelFormat {
                line: 1,
                reason: "expected `#bpe v1` header".into(),
            });
        }
        let mut declared = None;
        let mut attributes = BTreeMap::new();
        for field in fields.filter(|f| !f.is_empty()) {
            let (k, v) = field.split_once('=').ok_or_else(|| Error::ModelFormat {
                line: 1,
                reason: format!("bad header field `{field}`"),
            })?;
            if k == "merges" {
                declared = Some(v.parse::<usize>().map_err(|_| Error::ModelFormat {
                    line: 1,
                    reason: format!("bad merge count `{v}`"),
                })?);
            } else {
                attributes.insert(k.to_string(), v.to_string());
            }
        }
        let declared = declared.ok_or_else(|| Error::ModelFormat {
            line: 1,
            reason: "missing merges=<k>".into(),
        })?;
        let mut merges = Vec::with_capacity(declared);
        for (i, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split(' ').collect();
            if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
                return Err(Error::ModelFormat {
                    line: i + 2,
                    reason: "expected two space-separated symbols".into(),
                });
            }
            merges.push((parts[0].to_string(), parts[1].to_string()));
        }
        if merges.len() != declared {
            return Err(Error::ModelFormat {
                line: 1,
                reason: format!("header declares {declared} merges, file has {}", merges.len()),
            });
        }
        let mut model = Self::from_merges(merges)?;
        model.attributes = attributes;
        Ok(model)
    }

    pub fn segmenter(&self) -> Segmenter {
        Segmenter::new(self)
    }
}

#[derive(Default)]
struct Symbols {
    text: Vec<Arc<str>>,
    ids: HashMap<Arc<str>, u32>,
}

impl Symbols {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.text.len() as u32;
        let s: Arc<str> = Arc::from(s);
        self.text.push(s.clone());
        self.ids.insert(s, id);
        id
    }
}

#[derive(PartialEq, Eq)]
struct Candidate {
    count: i64,
    first: Arc<str>,
    second: Arc<str>,
    pair: (u32, u32),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap: higher count first, then the lexicographically smaller pair
        self.count
            .cmp(&other.count)
            .then_with(|| other.first.cmp(&self.first))
            .then_with(|| other.second.cmp(&self.second))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Replaces every non-overlapping `(a, b)` occurrence, scanning left to right.
fn merge_in(word: &[u32], a: u32, b: u32, merged: u32) -> Option<Vec<u32>> {
    if !word.windows(2).any(|w| w[0] == a && w[1] == b) {
        return None;
    }
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && word[i] == a && word[i + 1] == b {
            out.push(merged);
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    Some(out)
}

/// Learns up to `num_merges` merges from `freqs`.
pub fn learn_bpe(freqs: &FrequencyTable, num_merges: usize) -> BpeModel {
    let mut symbols = Symbols::default();
    let eow = symbols.intern(END_OF_WORD);
    let mut alphabet = BTreeSet::new();

    let mut sorted: Vec<(&String, &u64)> = freqs.iter().filter(|(_, &n)| n > 0).collect();
    sorted.sort();
    let mut words: Vec<(Vec<u32>, i64)> = Vec::with_capacity(sorted.len());
    for (word, &n) in sorted {
        let mut seq: Vec<u32> = word
            .chars()
            .map(|c| {
                alphabet.insert(c);
                symbols.intern(c.encode_utf8(&mut [0u8; 4]))
            })
            .collect();
        seq.push(eow);
        words.push((seq, n as i64));
    }

    let mut counts: HashMap<(u32, u32), i64> = HashMap::new();
    let mut where_: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for (idx, (seq, n)) in words.iter().enumerate() {
        for w in seq.windows(2) {
            let pair = (w[0], w[1]);
            *counts.entry(pair).or_default() += n;
            let list = where_.entry(pair).or_default();
            if list.last() != Some(&(idx as u32)) {
                list.push(idx as u32);
            }
        }
    }
    let candidate = |symbols: &Symbols, pair: (u32, u32), count: i64| Candidate {
        count,
        first: symbols.text[pair.0 as usize].clone(),
        second: symbols.text[pair.1 as usize].clone(),
        pair,
    };
    let mut heap: BinaryHeap<Candidate> = counts
        .iter()
        .map(|(&pair, &count)| candidate(&symbols, pair, count))
        .collect();

    let mut merges = Vec::new();
    let mut merged_pairs: HashSet<(Arc<str>, Arc<str>)> = HashSet::new();
    while merges.len() < num_merges {
        let Some(top) = heap.pop() else { break };
        if counts.get(&top.pair).copied().unwrap_or(0) != top.count {
            continue;
        }
        if top.count < MIN_PAIR_FREQUENCY {
            break;
        }
        // the same strings can re-form through a different merge path; a
        // merge list never repeats a pair
        if !merged_pairs.insert((top.first.clone(), top.second.clone())) {
            continue;
        }
        let (a, b) = top.pair;
        let joined = format!("{}{}", top.first, top.second);
        let new_id = symbols.intern(&joined);
        merges.push((top.first.to_string(), top.second.to_string()));

        let mut affected = where_.remove(&top.pair).unwrap_or_default();
        affected.sort_unstable();
        affected.dedup();
        let mut delta: HashMap<(u32, u32), i64> = HashMap::new();
        for idx in affected {
            let (seq, n) = &mut words[idx as usize];
            let Some(new_seq) = merge_in(seq, a, b, new_id) else {
                continue;
            };
            for w in seq.windows(2) {
                *delta.entry((w[0], w[1])).or_default() -= *n;
            }
            for w in new_seq.windows(2) {
                let pair = (w[0], w[1]);
                *delta.entry(pair).or_default() += *n;
                if pair.0 == new_id || pair.1 == new_id {
                    let list = where_.entry(pair).or_default();
                    if list.last() != Some(&idx) {
                        list.push(idx);
                    }
                }
            }
            *seq = new_seq;
        }
        for (pair, d) in delta {
            if d == 0 {
                continue;
            }
            let count = counts.entry(pair).or_default();
            *count += d;
            let now = *count;
            if now > 0 {
                heap.push(candidate(&symbols, pair, now));
            } else {
                counts.remove(&pair);
            }
        }
    }

    BpeModel {
        merges,
        alphabet,
        attributes: BTreeMap::new(),
    }
}

/// Applies a model's merges in learned order. Segmentations of each
/// distinct token are cached.
pub struct Segmenter {
    ids: HashMap<Box<str>, u32>,
    text: Vec<String>,
    ranks: HashMap<(u32, u32), (usize, u32)>,
    eow: u32,
    cache: HashMap<String, Vec<String>>,
}

const UNKNOWN: u32 = u32::MAX;

impl Segmenter {
    pub fn new(model: &BpeModel) -> Self {
        let mut ids: HashMap<Box<str>, u32> = HashMap::new();
        let mut text: Vec<String> = Vec::new();
        let mut intern = |s: &str, ids: &mut HashMap<Box<str>, u32>| -> u32 {
            if let Some(&id) = ids.get(s) {
                return id;
            }
            let id = text.len() as u32;
            text.push(s.to_string());
            ids.insert(s.into(), id);
            id
        };
        let eow = intern(END_OF_WORD, &mut ids);
        let mut ranks = HashMap::with_capacity(model.merges.len());
        for (rank, (a, b)) in model.merges.iter().enumerate() {
            let ia = intern(a, &mut ids);
            let ib = intern(b, &mut ids);
            let joined = intern(&format!("{a}{b}"), &mut ids);
            ranks.entry((ia, ib)).or_insert((rank, joined));
        }
        Segmenter {
            ids,
            text,
            ranks,
            eow,
            cache: HashMap::new(),
        }
    }

    /// Segments one token without touching the cache.
    pub fn segment_word(&self, token: &str) -> Vec<String> {
        let mut syms: Vec<(u32, String)> = token
            .chars()
            .map(|c| {
                let s = c.to_string();
                (self.ids.get(s.as_str()).copied().unwrap_or(UNKNOWN), s)
            })
            .collect();
        syms.push((self.eow, END_OF_WORD.to_string()));

        let mut last_rank: Option<usize> = None;
        loop {
            let best = syms
                .windows(2)
                .filter_map(|w| {
                    let key = (w[0].0, w[1].0);
                    self.ranks.get(&key).map(|&(rank, joined)| (rank, joined, key))
                })
                .filter(|(rank, _, _)| last_rank.is_none_or(|last| *rank > last))
                .min_by_key(|(rank, _, _)| *rank);
            let Some((rank, joined, (a, b))) = best else { break };
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i].0 == a && syms[i + 1].0 == b {
                    out.push((joined, self.text[joined as usize].clone()));
                    i += 2;
                } else {
                    out.push(std::mem::take(&mut syms[i]));
                    i += 1;
                }
            }
            syms = out;
            last_rank = Some(rank);
        }
        syms.into_iter().map(|(_, s)| s).collect()
    }

    pub fn apply<S: AsRef<str>>(&mut self, tokens: &[S]) -> Vec<String> {
        let mut out = Vec::new();
        for token in tokens {
            let token = token.as_ref();
            if let Some(hit) = self.cache.get(token) {
                out.extend(hit.iter().cloned());
                continue;
            }
            let seg = self.segment_word(token);
            out.extend(seg.iter().cloned());
            self.cache.insert(token.to_string(), seg);
        }
        out
    }
}

/// One-off segmentation. Builds a fresh [`Segmenter`]; reuse one for
/// corpora.
pub fn apply_bpe<S: AsRef<str>>(model: &BpeModel, tokens: &[S]) -> Vec<String> {
    model.segmenter().apply(tokens)
}

/// Concatenates symbols back into tokens, splitting after each symbol that
/// ends with the end-of-word marker.
pub fn decode_bpe<S: AsRef<str>>(symbols: &[S]) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut pending = 0;
    for sym in symbols {
        let sym = sym.as_ref();
        match sym.strip_suffix(END_OF_WORD) {
            Some(head) => {
                current.push_str(head);
                tokens.push(std::mem::take(&mut current));
                pending = 0;
            }
            None => {
                current.push_str(sym);
                pending += 1;
            }
        }
    }
    if pending > 0 {
        return Err(Error::DanglingSymbols(pending));
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> FrequencyTable {
        [("low", 5), ("lower", 2), ("newest", 6), ("widest", 3)]
            .into_iter()
            .map(|(w, n)| (w.to_string(), n))
            .collect()
    }

    fn pair(a: &str, b: &str) -> (String, String) {
        (a.to_string(), b.to_string())
    }

    #[test]
    fn toy_first_merges() {
        let model = learn_bpe(&toy(), 3);
        assert_eq!(model.merges(), [pair("e", "s"), pair("es", "t"), pair("est", END_OF_WORD)]);
    }

    #[test]
    fn zero_merges_is_character_split() {
        let model = learn_bpe(&toy(), 0);
        assert!(model.merges().is_empty());
        assert_eq!(apply_bpe(&model, &["low"]), ["l", "o", "w", END_OF_WORD]);
    }

    #[test]
    fn stops_without_repeated_pairs() {
        let freqs: FrequencyTable = [("a".to_string(), 1)].into_iter().collect();
        assert!(learn_bpe(&freqs, 10).merges().is_empty());
    }

    #[test]
    fn apply_example() {
        let model = BpeModel::from_merges(vec![pair("e", "s"), pair("es", "t"), pair("est", END_OF_WORD)]).unwrap();
        assert_eq!(apply_bpe(&model, &["newest"]), ["n", "e", "w", "est</w>"]);
        assert!(apply_bpe::<&str>(&model, &[]).is_empty());
        assert_eq!(apply_bpe(&model, &["xyz"]), ["x", "y", "z", END_OF_WORD]);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_bpe(&["n", "e", "w", "est</w>"]).unwrap(), ["newest"]);
        assert!(decode_bpe::<&str>(&[]).unwrap().is_empty());
        assert!(matches!(decode_bpe(&["a</w>", "b", "c"]), Err(Error::DanglingSymbols(2))));
    }

    #[test]
    fn file_round_trip() {
        let mut model = learn_bpe(&toy(), 10);
        model.attributes.insert("input".into(), "normalized".into());
        let text = model.to_file_string();
        assert!(text.starts_with(&format!("#bpe v1 merges={} input=normalized\n", model.num_merges())));
        let parsed = BpeModel::parse(&text).unwrap();
        assert_eq!(parsed.merges(), model.merges());
        assert_eq!(parsed.attributes, model.attributes);
    }

    #[test]
    fn bad_model_files() {
        assert!(BpeModel::parse("").is_err());
        assert!(BpeModel::parse("#bpe v1 merges=2\na b\n").is_err());
        assert!(BpeModel::parse("#bpe v1 merges=1\na\n").is_err());
        assert!(BpeModel::parse("#bpe v1 merges=2\na b\na b\n").is_err());
    }

    #[test]
    fn learning_is_deterministic() {
        let a = learn_bpe(&toy(), 100);
        let b = learn_bpe(&toy(), 100);
        assert_eq!(a, b);
    }

    #[test]
    fn vocabulary_bound() {
        for k in 0..12 {
            let model = learn_bpe(&toy(), k);
            let chars: BTreeSet<char> = toy().keys().flat_map(|w| w.chars()).collect();
            assert!(model.vocabulary().len() <= chars.len() + 1 + model.num_merges());
        }
    }
}
