mod support;

use litrank::corpus::Paragraph;
use litrank::evidence::EvidenceCandidate;
use litrank::par::Execution;
use litrank::rank::{
    confidence_score, ensemble_confidence, matching_score, rerank, rerank_score, KeywordStats, LexiconTagger,
    ScoringConfig, TieBreak,
};
use proptest::prelude::*;
use support::{oracle_confidence, oracle_sigmoid};

const TOL: f64 = 1e-9;

fn stats(s_freq: f64, s_num: usize) -> KeywordStats {
    KeywordStats {
        keywords: vec![],
        s_freq,
        s_num,
    }
}

/// (s_m, s_b, expected), worked by hand.
const CONFIDENCE: &[(f64, f64, f64)] = &[
    (2.0, 1.0, 3.0),
    (-2.0, -4.0, -3.0),
    (-4.0, -2.0, -3.0),
    (-1.0, -1.0, -0.5),
    (-3.0, -1.0, -2.5),
    (-0.5, -8.0, -7.75),
    (0.0, 0.0, 0.0),
    (0.0, -2.0, -2.0),
    (-2.0, 0.0, -2.0),
    (3.0, -1.0, 2.0),
    (-1.0, 3.0, 2.0),
    (-5.0, 1.5, -3.5),
    (0.25, 0.75, 1.0),
    (10.0, 10.0, 20.0),
];

/// (s_freq, s_num, l, expected) with default parameters.
const MATCHING: &[(f64, usize, usize, f64)] = &[
    (10.0, 3, 50, 31.0),
    (0.0, 0, 50, 0.0),
    (0.0, 2, 10, 20.0),
    (4.0, 1, 50, 10.4),
    (20.0, 0, 50, 2.0),
    (6.0, 2, 50, 20.6),
    (1.0, 1, 50, 10.1),
    (100.0, 5, 50, 60.0),
];

#[test]
fn confidence_table() {
    for &(m, b, want) in CONFIDENCE {
        assert!((confidence_score(m, b) - want).abs() <= TOL, "({m}, {b})");
    }
}

#[test]
fn matching_table() {
    let cfg = ScoringConfig::default();
    for &(f, n, l, want) in MATCHING {
        assert!((matching_score(&stats(f, n), l, &cfg) - want).abs() <= TOL, "({f}, {n}, {l})");
    }
}

#[test]
fn rerank_table() {
    let cases = [(31.0, 3.0, 0.5, 32.5), (0.0, -3.0, 0.5, -1.5), (10.0, 4.0, 0.0, 10.0), (1.0, 2.0, 1.0, 3.0)];
    for (m, c, a, want) in cases {
        assert!((rerank_score(m, c, a) - want).abs() <= TOL);
    }
}

#[test]
fn length_penalty_extremes() {
    let cfg = ScoringConfig::default();
    let long = matching_score(&stats(10.0, 0), 10_000, &cfg);
    let short = matching_score(&stats(10.0, 0), 0, &cfg);
    assert!((long - 2.0).abs() <= TOL);
    assert!(short > 0.0 && short < 1e-20);
    assert!((matching_score(&stats(10.0, 0), 51, &cfg) - 2.0 * oracle_sigmoid(1.0)).abs() <= TOL);
    assert!((matching_score(&stats(10.0, 0), 49, &cfg) - 2.0 * oracle_sigmoid(-1.0)).abs() <= TOL);
}

#[test]
fn custom_parameters_are_honored() {
    let cfg = ScoringConfig {
        lambda1: 1.0,
        lambda2: 2.0,
        l_c: 0,
        alpha: 2.0,
        tie_break: TieBreak::ParaId,
    };
    let want = 3.0 * oracle_sigmoid(5.0) + 4.0;
    assert!((matching_score(&stats(3.0, 2), 5, &cfg) - want).abs() <= TOL);
}

#[test]
fn degraded_confidence_uses_the_present_reader() {
    assert_eq!(ensemble_confidence(Some(0.7), None).value, 0.7);
    assert_eq!(ensemble_confidence(None, Some(-0.7)).value, -0.7);
    assert_eq!(ensemble_confidence(None, None).value, 0.0);
    assert_eq!(ensemble_confidence(Some(-2.0), Some(-4.0)).value, -3.0);
    assert!(ensemble_confidence(Some(1.0), Some(1.0)).missing.is_empty());
}

#[test]
fn at_least_thirty_cases() {
    assert!(CONFIDENCE.len() + MATCHING.len() + 4 + 4 + 1 + 4 >= 30);
}

fn candidate(i: usize, words: &str, s: Option<f64>) -> (Paragraph, EvidenceCandidate) {
    let p = Paragraph::new(&format!("d{}", i % 3), i as u32, words.to_owned());
    let e = EvidenceCandidate {
        paragraph: p.para_id.clone(),
        spans: vec![],
        evidence_sentences: vec![],
        s_m: s,
        s_b: s,
    };
    (p, e)
}

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["fever", "cough", "mask", "the", "of", "risk"]), 1..70)
        .prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn confidence_matches_oracle(m in -50.0f64..50.0, b in -50.0f64..50.0) {
        prop_assert!((confidence_score(m, b) - oracle_confidence(m, b)).abs() <= TOL);
        prop_assert_eq!(confidence_score(m, b), confidence_score(b, m));
    }

    #[test]
    fn both_negative_is_below_each(m in -50.0f64..-1e-3, b in -50.0f64..-1e-3) {
        let c = confidence_score(m, b);
        prop_assert!(c < 0.0);
        let hi = m.abs().max(b.abs());
        prop_assert!(c <= -hi / 2.0 + TOL);
        prop_assert!(c >= -hi - TOL);
    }

    #[test]
    fn matching_matches_oracle(f in 0u32..200, n in 0usize..10, l in 0usize..400) {
        let want = 0.2 * f64::from(f) * oracle_sigmoid(l as f64 - 50.0) + 10.0 * n as f64;
        prop_assert!((matching_score(&stats(f64::from(f), n), l, &ScoringConfig::default()) - want).abs() <= TOL);
    }

    #[test]
    fn rerank_is_sorted_and_order_free(
        items in prop::collection::vec((words(), prop::option::of(-3i32..4)), 1..12),
        seed in any::<u64>(),
    ) {
        let cands: Vec<_> = items.iter().enumerate()
            .map(|(i, (w, s))| candidate(i, w, s.map(|x| f64::from(x) / 2.0)))
            .collect();
        let cfg = ScoringConfig::default();
        let a = rerank(&cands, "fever risk", &cfg, &LexiconTagger, Execution::Sequential);
        let mut shuffled = cands.clone();
        let k = (seed as usize) % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let b = rerank(&shuffled, "fever risk", &cfg, &LexiconTagger, Execution::Parallel);
        prop_assert_eq!(&a, &b);
        for w in a.windows(2) {
            let ord = w[0].score_rerank.total_cmp(&w[1].score_rerank)
                .then(w[0].s_conf.total_cmp(&w[1].s_conf))
                .then(w[1].paragraph.cmp(&w[0].paragraph));
            prop_assert!(ord.is_gt());
        }
        for r in &a {
            prop_assert!((r.score_rerank - (r.s_match + 0.5 * r.s_conf)).abs() <= TOL);
        }
    }
}
