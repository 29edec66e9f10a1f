mod support;

use mtprep::qa::{containment_ratio, containment_sweep, default_sweep_thresholds, OverlapRatio};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{brute_containment, random_tokens};

#[test]
fn matches_nested_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..1000 {
        let src = random_tokens(&mut rng, 30);
        let tgt = if rng.gen_bool(0.3) {
            // a partial copy, to exercise high ratios
            let cut = rng.gen_range(0..=src.len());
            let mut t = src[..cut].to_vec();
            t.extend(random_tokens(&mut rng, 30 - cut));
            t
        } else {
            random_tokens(&mut rng, 30)
        };
        for n in 1..=4 {
            let got = containment_ratio(&src, &tgt, n);
            assert_eq!(got.value, brute_containment(&src, &tgt, n), "{src:?} {tgt:?} n={n}");
            assert!((0.0..=1.0).contains(&got.value));
            assert_eq!(got.value, containment_ratio(&tgt, &src, n).value);
        }
    }
}

#[test]
fn sweep_is_antitone() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let ratios: Vec<OverlapRatio> = (0..2000)
        .map(|_| {
            let src = random_tokens(&mut rng, 12);
            let tgt = random_tokens(&mut rng, 12);
            containment_ratio(&src, &tgt, 2)
        })
        .collect();
    let sweep = containment_sweep(&ratios, &default_sweep_thresholds());
    assert_eq!(sweep.len(), 13);
    for w in sweep.windows(2) {
        assert!(w[0].threshold < w[1].threshold);
        assert!(w[0].removed >= w[1].removed);
    }
    assert!(sweep[0].removed > sweep[12].removed);
}

#[test]
fn identical_sides_are_fully_contained() {
    let s: Vec<String> = "a b c d e".split(' ').map(String::from).collect();
    assert_eq!(containment_ratio(&s, &s, 3).value, 1.0);
    assert_eq!(containment_ratio(&s, &[], 3).value, 0.0);
}
