use serde::{Deserialize, Serialize};

use super::embed::{cosine, embed_sentence, EmbeddingBackend};
use super::SummarizeError;

pub const EXTRACTIVE_TOP_K: usize = 3;

/// A sentence containing predicted answer spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSentence {
    pub para_id: String,
    /// 0-based position of the paragraph in the re-ranked list.
    pub para_rank: usize,
    pub sentence_index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractiveSentence {
    pub para_id: String,
    pub sentence_index: usize,
    pub text: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractiveSummary {
    /// Sorted by similarity, highest first.
    pub sentences: Vec<ExtractiveSentence>,
    pub text: String,
    /// Set when there were fewer candidates than requested.
    pub short: bool,
}

/// Indices of the `k` best candidates by similarity. Ties go to the
/// earlier paragraph rank, then the lower sentence index.
pub fn select_top(candidates: &[AnswerSentence], similarities: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        similarities[b]
            .total_cmp(&similarities[a])
            .then(candidates[a].para_rank.cmp(&candidates[b].para_rank))
            .then(candidates[a].sentence_index.cmp(&candidates[b].sentence_index))
    });
    order.truncate(k);
    order
}

/// Embeds the query and every candidate with mean pooling, then keeps the
/// `k` candidates most cosine-similar to the query.
pub fn extractive_summary(
    query: &str,
    candidates: &[AnswerSentence],
    embedder: &dyn EmbeddingBackend,
    k: usize,
) -> Result<ExtractiveSummary, SummarizeError> {
    if candidates.is_empty() {
        return Err(SummarizeError::NoCandidates);
    }
    let mut texts = Vec::with_capacity(candidates.len() + 1);
    texts.push(query.to_owned());
    texts.extend(candidates.iter().map(|c| c.text.clone()));
    let matrices = embedder.embed(&texts)?;
    let pooled = matrices
        .iter()
        .map(|m| embed_sentence(m).map(|e| e.vector))
        .collect::<Result<Vec<_>, _>>()?;
    let q = &pooled[0];
    let sims: Vec<f64> = pooled[1..].iter().map(|v| cosine(q, v)).collect();
    let chosen = select_top(candidates, &sims, k);
    let sentences: Vec<ExtractiveSentence> = chosen
        .iter()
        .map(|&i| ExtractiveSentence {
            para_id: candidates[i].para_id.clone(),
            sentence_index: candidates[i].sentence_index,
            text: candidates[i].text.clone(),
            similarity: sims[i],
        })
        .collect();
    Ok(ExtractiveSummary {
        text: sentences.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" "),
        short: candidates.len() < k,
        sentences,
    })
}
