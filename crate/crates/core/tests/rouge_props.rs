mod support;

use litrank::evaluate::{
    rouge_l_tokens, rouge_n_tokens, rouge_report, rouge_su4_tokens, rouge_tokens, RougeMetric, RougeOptions,
    RougeScore,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{oracle_lcs, oracle_rouge_n, oracle_su4, oracle_tokens};

const VOCAB: &[&str] = &["the", "cat", "sat", "on", "mat", "virus", "spread", "fast", "a", "dog", "ran", "home"];

fn text(rng: &mut impl Rng, len: usize) -> String {
    (0..len).map(|_| VOCAB[rng.random_range(0..VOCAB.len())]).collect::<Vec<_>>().join(" ")
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn check(got: RougeScore, (r, p): (f64, f64)) {
    assert!(close(got.recall, r), "recall {} vs {r}", got.recall);
    assert!(close(got.precision, p), "precision {} vs {p}", got.precision);
}

#[test]
fn two_hundred_random_pairs_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let cl = rng.random_range(0..50);
        let rl = rng.random_range(1..50);
        let (c, r) = (text(&mut rng, cl), text(&mut rng, rl));
        let (ct, rt) = (oracle_tokens(&c), oracle_tokens(&r));
        let refs = vec![rt.clone()];
        check(rouge_n_tokens(&ct, &refs, 1).unwrap(), oracle_rouge_n(&ct, &rt, 1));
        check(rouge_n_tokens(&ct, &refs, 2).unwrap(), oracle_rouge_n(&ct, &rt, 2));
        let lcs = oracle_lcs(&ct, &rt) as f64;
        let want_l = (lcs / rt.len() as f64, if ct.is_empty() { 0.0 } else { lcs / ct.len() as f64 });
        check(rouge_l_tokens(&ct, &refs).unwrap(), want_l);
        check(rouge_su4_tokens(&ct, &refs).unwrap(), oracle_su4(&ct, &rt));
    }
}

#[test]
fn cat_sat_versus_cat_ran() {
    let r = rouge_report("the cat sat", &["the cat ran"], RougeOptions::default()).unwrap();
    assert_eq!(r.rouge_1.recall, 2.0 / 3.0);
    assert_eq!(r.rouge_2.recall, 1.0 / 2.0);
    assert_eq!(r.rouge_l.recall, 2.0 / 3.0);
}

#[test]
fn tokenization_is_shared() {
    let opts = RougeOptions::default();
    assert_eq!(rouge_tokens("The CAT, sat!", opts), vec!["the", "cat", "sat"]);
    let r = rouge_report("THE cat... SAT", &["the cat sat"], opts).unwrap();
    assert_eq!(r.rouge_su4.f1, 1.0);
}

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(VOCAB.to_vec()).prop_map(String::from), 0..30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn values_are_bounded_and_f1_is_harmonic(c in words(), r in prop::collection::vec(words(), 1..3)) {
        let c = c.join(" ");
        let refs: Vec<String> = r.iter().map(|x| x.join(" ")).collect();
        let refs: Vec<&str> = refs.iter().map(String::as_str).collect();
        let rep = rouge_report(&c, &refs, RougeOptions::default()).unwrap();
        for m in RougeMetric::ALL {
            let s = rep.get(m);
            for v in [s.recall, s.precision, s.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let h = if s.recall + s.precision == 0.0 { 0.0 } else { 2.0 * s.recall * s.precision / (s.recall + s.precision) };
            prop_assert!((s.f1 - h).abs() <= 1e-12);
        }
    }

    #[test]
    fn identical_text_scores_one(c in prop::collection::vec(prop::sample::select(VOCAB.to_vec()), 2..30)) {
        let c = c.join(" ");
        let rep = rouge_report(&c, &[&c], RougeOptions::default()).unwrap();
        for m in RougeMetric::ALL {
            prop_assert_eq!(rep.get(m), RougeScore { recall: 1.0, precision: 1.0, f1: 1.0 });
        }
    }

    #[test]
    fn adding_a_matched_ngram_never_lowers_recall(c in words(), r in prop::collection::vec(prop::sample::select(VOCAB.to_vec()).prop_map(String::from), 2..30), at in any::<prop::sample::Index>(), n in 1usize..3) {
        let refs = vec![r.clone()];
        let i = at.index(r.len() + 1 - n);
        let mut longer = c.clone();
        longer.extend_from_slice(&r[i..i + n]);
        let before = rouge_n_tokens(&c, &refs, n).unwrap().recall;
        let after = rouge_n_tokens(&longer, &refs, n).unwrap().recall;
        prop_assert!(after >= before);
        let before = rouge_su4_tokens(&c, &refs).unwrap().recall;
        let after = rouge_su4_tokens(&longer, &refs).unwrap().recall;
        prop_assert!(after >= before);
        let before = rouge_l_tokens(&c, &refs).unwrap().recall;
        let after = rouge_l_tokens(&longer, &refs).unwrap().recall;
        prop_assert!(after >= before);
    }

    #[test]
    fn multi_reference_is_the_best_single(c in words(), a in words(), b in words()) {
        let both = rouge_n_tokens(&c, &[a.clone(), b.clone()], 1).unwrap();
        let fa = rouge_n_tokens(&c, &[a], 1).unwrap();
        let fb = rouge_n_tokens(&c, &[b], 1).unwrap();
        prop_assert_eq!(both.f1, fa.f1.max(fb.f1));
    }
}
