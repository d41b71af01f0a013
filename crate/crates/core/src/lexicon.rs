//! Fixed word lists used by the lexical QA backend and the default keyword tagger.

use std::collections::HashSet;
use std::sync::OnceLock;

/// English function words. Matching is on normalized (lowercase) tokens.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same", "she",
    "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves",
];

/// Closed-class words beyond [`STOPWORDS`]: modals, auxiliaries, wh-forms,
/// discourse adverbs and quantifiers that never carry NN/VB/JJ content.
pub const CLOSED_CLASS: &[&str] = &[
    "also", "although", "among", "amongst", "another", "anyone", "anything", "cannot", "either",
    "else", "ever", "every", "everyone", "everything", "hence", "however", "may", "might", "must",
    "neither", "nobody", "none", "nothing", "one's", "per", "shall", "since", "someone",
    "something", "thus", "therefore", "though", "unless", "upon", "via", "whatever", "whether",
    "whereas", "whereby", "whichever", "whoever", "whose", "within", "without", "yet", "etc",
];

fn stopword_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.iter().copied().collect())
}

fn closed_class_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.iter().chain(CLOSED_CLASS).copied().collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopword_set().contains(token)
}

/// Stopwords plus the closed-class extension.
pub fn is_closed_class(token: &str) -> bool {
    closed_class_set().contains(token)
}

/// A content word for the lexical backend: not a stopword and at least two chars long.
pub fn is_content_word(token: &str) -> bool {
    token.chars().count() >= 2 && !is_stopword(token)
}
