//! ROUGE-N, ROUGE-L and ROUGE-SU4 over lowercased alphanumeric tokens.

use std::collections::HashMap;
use std::hash::Hash;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::lexicon::is_stopword;
use crate::text::tokenize_normalize;

/// Largest number of words allowed between the two halves of a skip-bigram.
pub const SU4_MAX_SKIP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RougeOptions {
    pub stem: bool,
    pub remove_stopwords: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl RougeScore {
    pub const ZERO: RougeScore = RougeScore {
        recall: 0.0,
        precision: 0.0,
        f1: 0.0,
    };

    pub fn from_counts(overlap: usize, candidate_total: usize, reference_total: usize) -> Self {
        let recall = if reference_total == 0 { 0.0 } else { overlap as f64 / reference_total as f64 };
        let precision = if candidate_total == 0 { 0.0 } else { overlap as f64 / candidate_total as f64 };
        Self::from_rp(recall, precision)
    }

    pub fn from_rp(recall: f64, precision: f64) -> Self {
        let f1 = if recall + precision == 0.0 {
            0.0
        } else {
            2.0 * recall * precision / (recall + precision)
        };
        Self { recall, precision, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RougeMetric {
    #[serde(rename = "rouge-1")]
    Rouge1,
    #[serde(rename = "rouge-2")]
    Rouge2,
    #[serde(rename = "rouge-l")]
    RougeL,
    #[serde(rename = "rouge-su4")]
    RougeSu4,
}

impl RougeMetric {
    pub const ALL: [RougeMetric; 4] = [Self::Rouge1, Self::Rouge2, Self::RougeL, Self::RougeSu4];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rouge1 => "rouge-1",
            Self::Rouge2 => "rouge-2",
            Self::RougeL => "rouge-l",
            Self::RougeSu4 => "rouge-su4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeReport {
    pub rouge_1: RougeScore,
    pub rouge_2: RougeScore,
    pub rouge_l: RougeScore,
    pub rouge_su4: RougeScore,
}

impl RougeReport {
    pub fn get(&self, metric: RougeMetric) -> RougeScore {
        match metric {
            RougeMetric::Rouge1 => self.rouge_1,
            RougeMetric::Rouge2 => self.rouge_2,
            RougeMetric::RougeL => self.rouge_l,
            RougeMetric::RougeSu4 => self.rouge_su4,
        }
    }
}

pub fn rouge_tokens(text: &str, options: RougeOptions) -> Vec<String> {
    let mut tokens = tokenize_normalize(text);
    if options.remove_stopwords {
        tokens.retain(|t| !is_stopword(t));
    }
    if options.stem {
        let stemmer = Stemmer::create(Algorithm::English);
        tokens = tokens.iter().map(|t| stemmer.stem(t).into_owned()).collect();
    }
    tokens
}

fn counts<K: Hash + Eq>(items: impl Iterator<Item = K>) -> (HashMap<K, usize>, usize) {
    let mut map = HashMap::new();
    let mut total = 0;
    for k in items {
        *map.entry(k).or_insert(0) += 1;
        total += 1;
    }
    (map, total)
}

fn clipped_overlap<K: Hash + Eq>(cand: &HashMap<K, usize>, reference: &HashMap<K, usize>) -> usize {
    cand.iter()
        .map(|(k, &c)| reference.get(k).map_or(0, |&r| c.min(r)))
        .sum()
}

fn ngrams(tokens: &[String], n: usize) -> impl Iterator<Item = &[String]> {
    tokens.windows(n)
}

/// Pairs `(i, j)` with `i < j` and at most `max_skip` words between them.
fn skip_bigrams(tokens: &[String], max_skip: usize) -> impl Iterator<Item = (&str, &str)> {
    (0..tokens.len()).flat_map(move |i| {
        let end = (i + max_skip + 2).min(tokens.len());
        (i + 1..end).map(move |j| (tokens[i].as_str(), tokens[j].as_str()))
    })
}

/// Keeps the reference with the best F1, first one on ties.
fn best_of(references: &[Vec<String>], score: impl Fn(&[String]) -> RougeScore) -> Result<RougeScore, EvalError> {
    if references.is_empty() {
        return Err(EvalError::NoReferences);
    }
    let mut best = RougeScore::ZERO;
    let mut first = true;
    for r in references {
        let s = score(r);
        if first || s.f1 > best.f1 {
            best = s;
            first = false;
        }
    }
    Ok(best)
}

pub fn rouge_n_tokens(candidate: &[String], references: &[Vec<String>], n: usize) -> Result<RougeScore, EvalError> {
    if n == 0 {
        return Err(EvalError::InvalidOrder(n));
    }
    let (cand, cand_total) = counts(ngrams(candidate, n));
    best_of(references, |r| {
        let (reference, ref_total) = counts(ngrams(r, n));
        RougeScore::from_counts(clipped_overlap(&cand, &reference), cand_total, ref_total)
    })
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l_tokens(candidate: &[String], references: &[Vec<String>]) -> Result<RougeScore, EvalError> {
    best_of(references, |r| RougeScore::from_counts(lcs_len(candidate, r), candidate.len(), r.len()))
}

pub fn rouge_su4_tokens(candidate: &[String], references: &[Vec<String>]) -> Result<RougeScore, EvalError> {
    let su = |t: &[String]| {
        let (mut map, mut total) = counts(skip_bigrams(t, SU4_MAX_SKIP).map(|(a, b)| (a.to_owned(), b.to_owned())));
        for u in t {
            *map.entry((u.clone(), String::new())).or_insert(0) += 1;
            total += 1;
        }
        (map, total)
    };
    let (cand, cand_total) = su(candidate);
    best_of(references, |r| {
        let (reference, ref_total) = su(r);
        RougeScore::from_counts(clipped_overlap(&cand, &reference), cand_total, ref_total)
    })
}

fn tokenize_all(references: &[&str], options: RougeOptions) -> Vec<Vec<String>> {
    references.iter().map(|r| rouge_tokens(r, options)).collect()
}

pub fn rouge_n(candidate: &str, references: &[&str], n: usize) -> Result<RougeScore, EvalError> {
    let opts = RougeOptions::default();
    rouge_n_tokens(&rouge_tokens(candidate, opts), &tokenize_all(references, opts), n)
}

pub fn rouge_l(candidate: &str, references: &[&str]) -> Result<RougeScore, EvalError> {
    let opts = RougeOptions::default();
    rouge_l_tokens(&rouge_tokens(candidate, opts), &tokenize_all(references, opts))
}

pub fn rouge_su4(candidate: &str, references: &[&str]) -> Result<RougeScore, EvalError> {
    let opts = RougeOptions::default();
    rouge_su4_tokens(&rouge_tokens(candidate, opts), &tokenize_all(references, opts))
}

/// All four metrics; each picks its own best reference.
pub fn rouge_report(candidate: &str, references: &[&str], options: RougeOptions) -> Result<RougeReport, EvalError> {
    let cand = rouge_tokens(candidate, options);
    let refs = tokenize_all(references, options);
    Ok(RougeReport {
        rouge_1: rouge_n_tokens(&cand, &refs, 1)?,
        rouge_2: rouge_n_tokens(&cand, &refs, 2)?,
        rouge_l: rouge_l_tokens(&cand, &refs)?,
        rouge_su4: rouge_su4_tokens(&cand, &refs)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat_sat_cat_ran() {
        let r1 = rouge_n("the cat sat", &["the cat ran"], 1).unwrap();
        let r2 = rouge_n("the cat sat", &["the cat ran"], 2).unwrap();
        let rl = rouge_l("the cat sat", &["the cat ran"]).unwrap();
        assert_eq!(r1.recall, 2.0 / 3.0);
        assert_eq!(r2.recall, 0.5);
        assert_eq!(rl.recall, 2.0 / 3.0);
    }

    #[test]
    fn identical_is_one() {
        let r = rouge_report("Viral shedding peaks early.", &["viral shedding peaks early"], RougeOptions::default())
            .unwrap();
        for m in RougeMetric::ALL {
            assert_eq!(r.get(m), RougeScore { recall: 1.0, precision: 1.0, f1: 1.0 }, "{m:?}");
        }
    }

    #[test]
    fn empty_candidate_scores_zero() {
        let r = rouge_report("", &["some words"], RougeOptions::default()).unwrap();
        for m in RougeMetric::ALL {
            assert_eq!(r.get(m), RougeScore::ZERO);
        }
    }

    #[test]
    fn no_references_is_an_error() {
        assert!(matches!(rouge_l("a b", &[]), Err(EvalError::NoReferences)));
        assert!(matches!(rouge_n("a b", &["a"], 0), Err(EvalError::InvalidOrder(0))));
    }

    #[test]
    fn clipping_limits_repeats() {
        let r = rouge_n("the the the the", &["the cat"], 1).unwrap();
        assert_eq!(r.precision, 0.25);
        assert_eq!(r.recall, 0.5);
    }

    #[test]
    fn skip_window_reaches_four_intervening_words() {
        let t: Vec<String> = "a b c d e f g".split(' ').map(String::from).collect();
        let pairs: Vec<_> = skip_bigrams(&t, SU4_MAX_SKIP).filter(|(a, _)| *a == "a").collect();
        assert_eq!(pairs.last().unwrap().1, "f");
        assert_eq!(pairs.len(), 5);
    }

    #[test]
    fn multi_reference_takes_best() {
        let r = rouge_n("alpha beta", &["gamma", "alpha beta"], 1).unwrap();
        assert_eq!(r.f1, 1.0);
    }

    #[test]
    fn stemming_flag_conflates_forms() {
        let plain = rouge_report("infections", &["infection"], RougeOptions::default()).unwrap();
        let stem = rouge_report(
            "infections",
            &["infection"],
            RougeOptions {
                stem: true,
                remove_stopwords: false,
            },
        )
        .unwrap();
        assert_eq!(plain.rouge_1.recall, 0.0);
        assert_eq!(stem.rouge_1.recall, 1.0);
    }
}
