//! Sentence-ranking metrics: the zero-when-missed MRR, P@1 and R@3.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::text::tokenize_normalize;

/// A sentence of the split article: paragraph position, then sentence
/// position within that paragraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceRef {
    pub paragraph: usize,
    pub sentence: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseCandidate {
    pub sentence: SentenceRef,
    pub text: String,
    pub score: f64,
}

/// One query against one article. `candidates` are in ranked order, one
/// per paragraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingCase {
    pub case_id: String,
    pub query: String,
    pub n_paragraphs: usize,
    pub candidates: Vec<CaseCandidate>,
    pub gold: Vec<SentenceRef>,
}

impl RankingCase {
    pub fn new(
        case_id: impl Into<String>,
        query: impl Into<String>,
        n_paragraphs: usize,
        candidates: Vec<CaseCandidate>,
        gold: Vec<SentenceRef>,
    ) -> Result<Self, EvalError> {
        let case_id = case_id.into();
        let mut seen = vec![false; n_paragraphs];
        for c in &candidates {
            let p = c.sentence.paragraph;
            if p >= n_paragraphs || std::mem::replace(&mut seen[p], true) {
                return Err(EvalError::InvalidCase(
                    case_id,
                    format!("candidate for paragraph {p} is out of range or repeated"),
                ));
            }
        }
        if let Some(g) = gold.iter().find(|g| g.paragraph >= n_paragraphs) {
            return Err(EvalError::InvalidCase(
                case_id,
                format!("gold paragraph {} out of range", g.paragraph),
            ));
        }
        Ok(Self {
            case_id,
            query: query.into(),
            n_paragraphs,
            candidates,
            gold,
        })
    }

    /// 1-based rank of the first golden candidate.
    pub fn first_golden_rank(&self) -> Option<usize> {
        self.candidates
            .iter()
            .position(|c| self.gold.contains(&c.sentence))
            .map(|i| i + 1)
    }
}

fn mean_over(cases: &[RankingCase], f: impl Fn(Option<usize>) -> f64) -> Result<f64, EvalError> {
    if cases.is_empty() {
        return Err(EvalError::NoCases);
    }
    Ok(cases.iter().map(|c| f(c.first_golden_rank())).sum::<f64>() / cases.len() as f64)
}

pub fn mrr(cases: &[RankingCase]) -> Result<f64, EvalError> {
    mean_over(cases, |r| r.map_or(0.0, |r| 1.0 / r as f64))
}

pub fn p_at_1(cases: &[RankingCase]) -> Result<f64, EvalError> {
    mean_over(cases, |r| if r == Some(1) { 1.0 } else { 0.0 })
}

pub fn r_at_3(cases: &[RankingCase]) -> Result<f64, EvalError> {
    mean_over(cases, |r| if r.is_some_and(|r| r <= 3) { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub mrr: f64,
    pub p_at_1: f64,
    pub r_at_3: f64,
    pub n_cases: usize,
}

pub fn ranking_metrics(cases: &[RankingCase]) -> Result<RankingMetrics, EvalError> {
    Ok(RankingMetrics {
        mrr: mrr(cases)?,
        p_at_1: p_at_1(cases)?,
        r_at_3: r_at_3(cases)?,
        n_cases: cases.len(),
    })
}

/// Whether the normalized tokens of `answer` occur contiguously in those
/// of `sentence`.
pub fn contains_answer(sentence: &str, answer: &str) -> bool {
    let needle = tokenize_normalize(answer);
    if needle.is_empty() {
        return false;
    }
    tokenize_normalize(sentence).windows(needle.len()).any(|w| w == needle.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case_with_rank(rank: Option<usize>, n: usize) -> RankingCase {
        let candidates = (0..n)
            .map(|p| CaseCandidate {
                sentence: SentenceRef { paragraph: p, sentence: 0 },
                text: String::new(),
                score: 0.0,
            })
            .collect();
        let gold = rank.map(|r| SentenceRef { paragraph: r - 1, sentence: 0 }).into_iter().collect();
        RankingCase::new("c", "q", n, candidates, gold).unwrap()
    }

    #[test]
    fn ranks_one_two_miss() {
        let cases = [case_with_rank(Some(1), 5), case_with_rank(Some(2), 5), case_with_rank(None, 5)];
        assert_eq!(mrr(&cases).unwrap(), 0.5);
    }

    #[test]
    fn ranks_one_two_five() {
        let cases = [case_with_rank(Some(1), 6), case_with_rank(Some(2), 6), case_with_rank(Some(5), 6)];
        assert_eq!(p_at_1(&cases).unwrap(), 1.0 / 3.0);
        assert_eq!(r_at_3(&cases).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn all_rank_one_and_all_missed() {
        let hit = vec![case_with_rank(Some(1), 3); 4];
        assert_eq!(mrr(&hit).unwrap(), 1.0);
        let miss = vec![case_with_rank(None, 3); 4];
        assert_eq!(p_at_1(&miss).unwrap(), 0.0);
        assert_eq!(r_at_3(&miss).unwrap(), 0.0);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(mrr(&[]), Err(EvalError::NoCases)));
        assert!(matches!(p_at_1(&[]), Err(EvalError::NoCases)));
        assert!(matches!(r_at_3(&[]), Err(EvalError::NoCases)));
    }

    #[test]
    fn golden_sentence_not_among_candidates_counts_as_miss() {
        let candidates = vec![CaseCandidate {
            sentence: SentenceRef { paragraph: 0, sentence: 0 },
            text: String::new(),
            score: 1.0,
        }];
        let gold = vec![SentenceRef { paragraph: 0, sentence: 2 }];
        let c = RankingCase::new("c", "q", 1, candidates, gold).unwrap();
        assert_eq!(c.first_golden_rank(), None);
    }

    #[test]
    fn repeated_paragraph_is_rejected() {
        let cand = CaseCandidate {
            sentence: SentenceRef { paragraph: 0, sentence: 0 },
            text: String::new(),
            score: 0.0,
        };
        assert!(RankingCase::new("c", "q", 2, vec![cand.clone(), cand], vec![]).is_err());
    }

    #[test]
    fn answer_match_is_token_normalized() {
        assert!(contains_answer("The median was 5.2 days (range 2-14).", "5.2 DAYS"));
        assert!(!contains_answer("The median was 5.2 days.", "5.3 days"));
        assert!(!contains_answer("anything", "  "));
    }
}
