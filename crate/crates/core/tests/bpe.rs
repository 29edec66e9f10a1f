mod support;

use std::collections::HashMap;

use mtprep::subword::{apply_bpe, decode_bpe, learn_bpe, BpeModel, FrequencyTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{brute_bpe, random_word};

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
fn toy_table_first_merges() {
    let model = learn_bpe(&toy(), 10);
    assert_eq!(&model.merges()[..3], &[pair("e", "s"), pair("es", "t"), pair("est", "</w>")]);
}

#[test]
fn toy_table_full_trace_matches_brute_force() {
    let expected = brute_bpe(&toy(), 1000);
    assert_eq!(learn_bpe(&toy(), 1000).merges(), expected.as_slice());
    assert_eq!(expected[3], pair("l", "o"));
}

#[test]
fn random_tables_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..200 {
        let mut table = HashMap::new();
        for _ in 0..rng.gen_range(1..25) {
            *table.entry(random_word(&mut rng)).or_insert(0) += rng.gen_range(1..8);
        }
        let k = rng.gen_range(0..60);
        assert_eq!(learn_bpe(&table, k).merges(), brute_bpe(&table, k).as_slice(), "{table:?}");
    }
}

#[test]
fn decode_inverts_apply_on_random_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..1000 {
        let corpus: Vec<String> = (0..rng.gen_range(1..30)).map(|_| random_word(&mut rng)).collect();
        let mut table = FrequencyTable::new();
        for w in &corpus {
            *table.entry(w.clone()).or_default() += 1;
        }
        let model = learn_bpe(&table, rng.gen_range(0..40));
        // unseen words too
        let probe: Vec<String> = corpus.iter().cloned().chain((0..5).map(|_| random_word(&mut rng))).collect();
        let symbols = apply_bpe(&model, &probe);
        assert_eq!(decode_bpe(&symbols).unwrap(), probe);
    }
}

#[test]
fn model_file_round_trip_preserves_segmentation() {
    let model = learn_bpe(&toy(), 20);
    let reloaded = BpeModel::parse(&model.to_file_string()).unwrap();
    assert_eq!(reloaded, model);
    let words = ["lowest", "newer", "wider"];
    assert_eq!(apply_bpe(&reloaded, &words), apply_bpe(&model, &words));
}
