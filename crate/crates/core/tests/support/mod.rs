//! Slow, obviously-correct reference implementations and random data
//! generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

/// Every contiguous n-gram of `tokens`, duplicates included.
pub fn all_ngrams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    if n == 0 || tokens.len() < n {
        return out;
    }
    for start in 0..=tokens.len() - n {
        out.push(tokens[start..start + n].to_vec());
    }
    out
}

fn occurrences(gram: &[String], grams: &[Vec<String>]) -> u64 {
    grams.iter().filter(|g| g.as_slice() == gram).count() as u64
}

/// Clipped matches and totals of order `n`, summed over the corpus, counted
/// with nested loops only.
pub fn brute_precision(hyps: &[Vec<String>], refs: &[Vec<String>], n: usize) -> (u64, u64) {
    let (mut matched, mut total) = (0, 0);
    for (h, r) in hyps.iter().zip(refs) {
        let hg = all_ngrams(h, n);
        let rg = all_ngrams(r, n);
        total += hg.len() as u64;
        let mut seen: Vec<&Vec<String>> = Vec::new();
        for g in &hg {
            if seen.contains(&g) {
                continue;
            }
            seen.push(g);
            matched += occurrences(g, &hg).min(occurrences(g, &rg));
        }
    }
    (matched, total)
}

/// Unsmoothed corpus BLEU on a 0-100 scale; 0 when any order has no
/// matches or no hypothesis n-grams.
pub fn brute_bleu(hyps: &[Vec<String>], refs: &[Vec<String>], max_n: usize) -> f64 {
    let c: usize = hyps.iter().map(Vec::len).sum();
    let r: usize = refs.iter().map(Vec::len).sum();
    let mut product = 1.0f64;
    for n in 1..=max_n {
        let (m, t) = brute_precision(hyps, refs, n);
        if m == 0 || t == 0 {
            return 0.0;
        }
        product *= m as f64 / t as f64;
    }
    let bp = if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    100.0 * bp * product.powf(1.0 / max_n as f64)
}

fn unique(grams: Vec<Vec<String>>) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    for g in grams {
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

/// Shared unique n-grams over the smaller unique set, with the order
/// lowered to the shorter side when needed; 0 if a side is empty.
pub fn brute_containment(src: &[String], tgt: &[String], n: usize) -> f64 {
    let order = n.min(src.len()).min(tgt.len());
    if order == 0 {
        return 0.0;
    }
    let s = unique(all_ngrams(src, order));
    let t = unique(all_ngrams(tgt, order));
    let mut shared = 0;
    for a in &s {
        for b in &t {
            if a == b {
                shared += 1;
            }
        }
    }
    shared as f64 / s.len().min(t.len()) as f64
}

/// BPE learning by full recount after every merge.
pub fn brute_bpe(freqs: &HashMap<String, u64>, num_merges: usize) -> Vec<(String, String)> {
    let mut words: Vec<(Vec<String>, u64)> = freqs
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(w, &n)| {
            let mut syms: Vec<String> = w.chars().map(String::from).collect();
            syms.push("</w>".into());
            (syms, n)
        })
        .collect();
    let mut merges: Vec<(String, String)> = Vec::new();
    while merges.len() < num_merges {
        let mut counts: Vec<((String, String), u64)> = Vec::new();
        for (syms, n) in &words {
            for w in syms.windows(2) {
                let pair = (w[0].clone(), w[1].clone());
                match counts.iter_mut().find(|(p, _)| *p == pair) {
                    Some((_, c)) => *c += n,
                    None => counts.push((pair, *n)),
                }
            }
        }
        let best = counts
            .into_iter()
            .filter(|(p, _)| !merges.contains(p))
            .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)));
        let Some((pair, count)) = best else { break };
        if count < 2 {
            break;
        }
        for (syms, _) in &mut words {
            let mut out = Vec::new();
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == pair.0 && syms[i + 1] == pair.1 {
                    out.push(format!("{}{}", pair.0, pair.1));
                    i += 2;
                } else {
                    out.push(syms[i].clone());
                    i += 1;
                }
            }
            *syms = out;
        }
        merges.push(pair);
    }
    merges
}

pub const VOCAB: &[&str] = &["a", "b", "c", "d", "e", "f", "g", "h"];

/// Tokens drawn from a small vocabulary so that n-grams collide often.
pub fn random_tokens<R: Rng>(rng: &mut R, max_len: usize) -> Vec<String> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| VOCAB.choose(rng).unwrap().to_string()).collect()
}

/// A random word over a small alphabet, including one non-ASCII letter.
pub fn random_word<R: Rng>(rng: &mut R) -> String {
    const LETTERS: &[char] = &['a', 'b', 'c', 'd', 'r', 'ب', 'e'];
    let len = rng.gen_range(1..=7);
    (0..len).map(|_| *LETTERS.choose(rng).unwrap()).collect()
}

const AR_WORDS: &[&str] = &[
    "كتب", "الولد", "رسالة", "إلى", "صديقه", "في", "المدينة", "يوم", "الجمعة", "ذهبت", "المدرسة", "مع", "أخي",
    "الكبير", "قرأ", "الكتاب", "الجديد", "سافر", "الرئيس", "القاهرة", "اليوم", "أعلنت", "الحكومة", "عن", "خطة",
];
const EN_WORDS: &[&str] = &[
    "the", "boy", "wrote", "a", "letter", "to", "his", "friend", "in", "city", "on", "friday", "i", "went",
    "school", "with", "my", "older", "brother", "read", "new", "book", "president", "travelled", "government",
];
const SHARED: &[&str] = &["2019", "Cairo", "UN", "42", "Nile", "Doha", "7", "OPEC", "Beirut", "2020"];

fn words<R: Rng>(rng: &mut R, pool: &[&str], len: std::ops::Range<usize>) -> Vec<String> {
    let len = rng.gen_range(len);
    (0..len).map(|_| pool.choose(rng).unwrap().to_string()).collect()
}

/// A synthetic Arabic-English bitext mixing plausible translations (sharing
/// names and numbers), unrelated pairs, full and partial source copies and
/// exact repeats.
pub fn synthetic_bitext<R: Rng>(rng: &mut R, n: usize) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::with_capacity(n);
    while out.len() < n {
        let roll = rng.gen_range(0..100);
        let pair = if roll < 6 && !out.is_empty() {
            out[rng.gen_range(0..out.len())].clone()
        } else if roll < 10 {
            let src = words(rng, AR_WORDS, 3..12).join(" ");
            (src.clone(), src)
        } else if roll < 13 {
            // copied-through source followed by some real target words
            let src = words(rng, AR_WORDS, 6..11);
            let mut tgt = src[..src.len() - 1].to_vec();
            tgt.extend(words(rng, EN_WORDS, 3..7));
            (src.join(" "), tgt.join(" "))
        } else if roll < 18 {
            (
                words(rng, AR_WORDS, 3..12).join(" "),
                words(rng, EN_WORDS, 3..12).join(" "),
            )
        } else {
            let shared = words(rng, SHARED, 1..4);
            let mut src = words(rng, AR_WORDS, 1..4);
            let mut tgt = words(rng, EN_WORDS, 1..4);
            src.extend(shared.iter().cloned());
            tgt.extend(shared);
            src.shuffle(rng);
            tgt.shuffle(rng);
            let mut src = src.join(" ");
            if rng.gen_bool(0.1) {
                src.push_str(" https://example.com/a");
            }
            if rng.gen_bool(0.1) {
                src = format!("@user{} {}", rng.gen_range(0..9), src);
            }
            if rng.gen_bool(0.2) {
                src = src.replacen("ا", "اَ", 1);
            }
            (src, tgt.join(" ") + " .")
        };
        out.push(pair);
    }
    out
}

pub fn to_tsv(pairs: &[(String, String)]) -> String {
    let mut out = String::new();
    for (s, t) in pairs {
        out.push_str(s);
        out.push('\t');
        out.push_str(t);
        out.push('\n');
    }
    out
}
