use serde::{Deserialize, Serialize};

use super::{validate_span, BackendRole, EvidenceError, RawSpan};
use crate::corpus::CharSpan;

/// A span kept after fusing two readers' predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedSpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
    /// Highest score among the predictions merged into this span.
    pub score: f64,
    /// Readers whose predictions were merged into this span, sorted.
    pub sources: Vec<BackendRole>,
    /// Set when the span partially overlaps another kept span (neither contains the other).
    pub overlap: bool,
}

impl FusedSpan {
    pub fn span(&self) -> CharSpan {
        CharSpan::new(self.start, self.end)
    }
}

/// Fuses generalist (`spans_m`) and domain-expert (`spans_b`) predictions
/// for one paragraph.
///
/// Identical spans merge into one. A span contained in another is absorbed
/// by its container. Everything else is kept, ordered by `(start, end)`.
pub fn fuse_answers(spans_m: &[RawSpan], spans_b: &[RawSpan], text: &str) -> Result<Vec<FusedSpan>, EvidenceError> {
    let mut unique: Vec<FusedSpan> = Vec::new();
    let tagged = spans_m
        .iter()
        .map(|s| (s, BackendRole::Generalist))
        .chain(spans_b.iter().map(|s| (s, BackendRole::DomainExpert)));
    for (raw, role) in tagged {
        let s = validate_span(raw, text)?;
        match unique.iter_mut().find(|u| u.start == s.start && u.end == s.end) {
            Some(u) => {
                u.score = u.score.max(s.score);
                if !u.sources.contains(&role) {
                    u.sources.push(role);
                }
            }
            None => unique.push(FusedSpan {
                start: s.start,
                end: s.end,
                text: s.text,
                score: s.score,
                sources: vec![role],
                overlap: false,
            }),
        }
    }

    let mut kept: Vec<FusedSpan> = unique
        .iter()
        .filter(|u| !unique.iter().any(|v| v.span() != u.span() && v.span().contains(&u.span())))
        .cloned()
        .collect();
    for k in kept.iter_mut() {
        let outer = k.span();
        for inner in unique.iter().filter(|u| outer.contains(&u.span())) {
            k.score = k.score.max(inner.score);
            for r in &inner.sources {
                if !k.sources.contains(r) {
                    k.sources.push(*r);
                }
            }
        }
        k.sources.sort();
    }
    kept.sort_by_key(|k| (k.start, k.end));
    let spans: Vec<CharSpan> = kept.iter().map(FusedSpan::span).collect();
    for (i, k) in kept.iter_mut().enumerate() {
        k.overlap = spans.iter().enumerate().any(|(j, o)| j != i && o.intersects(&spans[i]));
    }
    Ok(kept)
}

/// Indices of every sentence intersecting at least one span; sorted, deduplicated.
pub fn expand_to_sentences(spans: &[FusedSpan], sentences: &[CharSpan]) -> Vec<usize> {
    let mut out: Vec<usize> = sentences
        .iter()
        .enumerate()
        .filter(|(_, s)| spans.iter().any(|sp| sp.span().intersects(s)))
        .map(|(i, _)| i)
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJ";

    fn s(start: usize, end: usize) -> RawSpan {
        RawSpan {
            start,
            end,
            text: String::new(),
            score: 1.0,
        }
    }

    fn ranges(f: &[FusedSpan]) -> Vec<(usize, usize)> {
        f.iter().map(|x| (x.start, x.end)).collect()
    }

    #[test]
    fn identical_spans_merge_once() {
        let f = fuse_answers(&[s(10, 20)], &[s(10, 20)], TEXT).unwrap();
        assert_eq!(ranges(&f), vec![(10, 20)]);
        assert_eq!(f[0].sources, vec![BackendRole::Generalist, BackendRole::DomainExpert]);
        assert_eq!(f[0].text, "abcdefghij");
    }

    #[test]
    fn inclusion_keeps_container() {
        let f = fuse_answers(&[s(10, 20)], &[s(12, 18)], TEXT).unwrap();
        assert_eq!(ranges(&f), vec![(10, 20)]);
        assert_eq!(f[0].sources.len(), 2);
        let g = fuse_answers(&[s(12, 18)], &[s(10, 20)], TEXT).unwrap();
        assert_eq!(ranges(&g), vec![(10, 20)]);
    }

    #[test]
    fn disjoint_spans_both_kept_in_start_order() {
        let f = fuse_answers(&[s(30, 40)], &[s(10, 20)], TEXT).unwrap();
        assert_eq!(ranges(&f), vec![(10, 20), (30, 40)]);
        assert!(f.iter().all(|x| !x.overlap && x.sources.len() == 1));
    }

    #[test]
    fn partial_overlap_kept_and_flagged() {
        let f = fuse_answers(&[s(10, 20)], &[s(15, 25)], TEXT).unwrap();
        assert_eq!(ranges(&f), vec![(10, 20), (15, 25)]);
        assert!(f.iter().all(|x| x.overlap));
    }

    #[test]
    fn out_of_bounds_is_rejected() {
        assert!(fuse_answers(&[s(10, 200)], &[], TEXT).is_err());
    }

    #[test]
    fn sentence_expansion() {
        let sentences = [CharSpan::new(0, 10), CharSpan::new(11, 20), CharSpan::new(21, 30)];
        let fused = |a, b| FusedSpan {
            start: a,
            end: b,
            text: String::new(),
            score: 0.0,
            sources: vec![],
            overlap: false,
        };
        assert_eq!(expand_to_sentences(&[fused(22, 25)], &sentences), vec![2]);
        assert_eq!(expand_to_sentences(&[fused(8, 14)], &sentences), vec![0, 1]);
        assert_eq!(expand_to_sentences(&[fused(12, 13), fused(15, 18)], &sentences), vec![1]);
        assert!(expand_to_sentences(&[], &sentences).is_empty());
    }
}
