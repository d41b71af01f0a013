//! Fixture helpers and brute-force oracles shared by the integration tests.
//! The oracles recompute everything from the definitions with the simplest
//! possible code and never call the scoring code under test.
#![allow(dead_code)]

pub mod http;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use litrank::corpus::{ingest, paragraphs_for, Document, Paragraph, SplitterConfig};
use litrank::index::{build_index_dir, IndexConfig};
use litrank::lexicon::{is_closed_class, is_stopword};
use serde_json::{json, Value};

pub const GOLDEN_QUERY: &str = "incubation period";

pub fn golden_path() -> PathBuf {
    fixtures().join("golden_incubation_period.json")
}

pub fn golden() -> Value {
    serde_json::from_str(&std::fs::read_to_string(golden_path()).unwrap()).unwrap()
}

/// Projects a serialized response onto the fields the golden file records.
pub fn project(resp: &Value) -> Value {
    let r = &resp["results"][0];
    let rows: Vec<Value> = r["snippets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            json!({
                "para_id": s["para_id"],
                "retrieval_rank": s["retrieval_rank"],
                "bm25_score": s["bm25_score"],
                "score_rerank": s["score_rerank"],
                "s_conf": s["s_conf"],
                "highlights": s["highlights"].as_array().unwrap().iter().map(|h| json!([h["start"], h["end"]])).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "query": r["query"], "top_n": resp["config"]["top_n"], "snippets": rows })
}

pub fn assert_same(got: &Value, want: &Value) {
    let (g, w) = (got["snippets"].as_array().unwrap(), want["snippets"].as_array().unwrap());
    assert_eq!(g.len(), w.len());
    for (a, b) in g.iter().zip(w) {
        assert_eq!(a["para_id"], b["para_id"]);
        assert_eq!(a["retrieval_rank"], b["retrieval_rank"]);
        assert_eq!(a["highlights"], b["highlights"], "{}", a["para_id"]);
        for k in ["bm25_score", "score_rerank", "s_conf"] {
            let (x, y) = (a[k].as_f64().unwrap(), b[k].as_f64().unwrap());
            assert!((x - y).abs() <= 1e-9, "{} {k}: {x} vs {y}", a["para_id"]);
        }
    }
}

pub fn strip_timings(v: &mut Value) {
    for r in v["results"].as_array_mut().unwrap() {
        r.as_object_mut().unwrap().remove("timings");
    }
}

/// Fixtures live with the core crate; this module is also compiled into
/// the server and CLI test targets.
pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn core_fixtures() -> PathBuf {
    fixtures()
}

/// Ingests the fixture corpus and builds an index under `root`; returns the
/// index directory.
pub fn build_fixture_index(root: &Path) -> PathBuf {
    let corpus = root.join("corpus");
    let index = root.join("index");
    ingest(&fixtures().join("corpus"), &corpus, &SplitterConfig::default()).expect("ingest fixture");
    build_index_dir(&corpus, &index, IndexConfig::default()).expect("index fixture");
    index
}

/// Lowercased ASCII-alphanumeric runs. The fixtures are ASCII.
pub fn oracle_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

pub struct OracleParagraph {
    pub id: String,
    pub fields: [Vec<String>; 3],
}

pub fn oracle_paragraphs(docs: &[Document], paras: &[Paragraph]) -> Vec<OracleParagraph> {
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    paras
        .iter()
        .map(|p| {
            let d = by_id[p.doc_id.as_str()];
            OracleParagraph {
                id: p.para_id.clone(),
                fields: [oracle_tokens(&p.text), oracle_tokens(&d.title), oracle_tokens(&d.abstract_text)],
            }
        })
        .collect()
}

/// Scores every paragraph against every query term in every field.
pub fn brute_bm25(
    paras: &[OracleParagraph],
    query: &str,
    k1: f64,
    b: f64,
    weights: [f64; 3],
    n: usize,
) -> Vec<(String, f64)> {
    let mut terms: Vec<String> = Vec::new();
    for t in oracle_tokens(query) {
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    let np = paras.len() as f64;
    let avg: Vec<f64> = (0..3)
        .map(|f| paras.iter().map(|p| p.fields[f].len() as f64).sum::<f64>() / np)
        .collect();
    let mut scored: Vec<(String, f64)> = Vec::new();
    for p in paras {
        let mut score = 0.0;
        let mut touched = false;
        for t in &terms {
            for f in 0..3 {
                if weights[f] == 0.0 {
                    continue;
                }
                let tf = p.fields[f].iter().filter(|x| *x == t).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let df = paras.iter().filter(|o| o.fields[f].contains(t)).count() as f64;
                let idf = (1.0 + (np - df + 0.5) / (df + 0.5)).ln();
                let norm = if avg[f] > 0.0 { 1.0 - b + b * p.fields[f].len() as f64 / avg[f] } else { 1.0 };
                score += weights[f] * (idf * (tf * (k1 + 1.0) / (tf + k1 * norm)));
                touched = true;
            }
        }
        if touched {
            scored.push((p.id.clone(), score));
        }
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(n);
    scored
}

/// Word tokens with char offsets.
pub fn oracle_tokens_with_offsets(text: &str) -> Vec<(String, usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_alphanumeric() {
            let s = i;
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
            let w: String = chars[s..i].iter().collect::<String>().to_lowercase();
            out.push((w, s, i));
        } else {
            i += 1;
        }
    }
    out
}

/// Lexical reader by brute force: the sentence covering the most distinct
/// query content words, and within it the shortest (then earliest) token
/// window holding all of the matched words. Returns `(start, end, score)`.
pub fn oracle_lexical(query: &str, text: &str, sentences: &[(usize, usize)]) -> Option<(usize, usize, f64)> {
    let mut words: Vec<String> = Vec::new();
    for t in oracle_tokens(query) {
        if t.chars().count() >= 2 && !is_stopword(&t) && !words.contains(&t) {
            words.push(t);
        }
    }
    if words.is_empty() {
        return None;
    }
    let toks = oracle_tokens_with_offsets(text);
    type Tok = (String, usize, usize);
    let mut best: Option<(usize, Vec<Tok>, Vec<String>)> = None;
    for &(ss, se) in sentences {
        let st: Vec<_> = toks.iter().filter(|t| t.1 >= ss && t.2 <= se).cloned().collect();
        let present: Vec<String> = words.iter().filter(|w| st.iter().any(|t| &t.0 == *w)).cloned().collect();
        if present.len() > best.as_ref().map_or(0, |b| b.0) {
            best = Some((present.len(), st, present));
        }
    }
    let (hits, st, present) = best?;
    let mut win: Option<(usize, usize)> = None;
    for i in 0..st.len() {
        for j in i..st.len() {
            let ok = present.iter().all(|w| st[i..=j].iter().any(|t| &t.0 == w));
            if ok && win.is_none_or(|(a, b)| j - i < b - a) {
                win = Some((i, j));
            }
        }
    }
    let (i, j) = win?;
    Some((st[i].1, st[j].2, hits as f64 / words.len() as f64))
}

pub fn oracle_sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn oracle_confidence(m: f64, b: f64) -> f64 {
    if m < 0.0 && b < 0.0 {
        0.5 * m.abs().min(b.abs()) - m.abs().max(b.abs())
    } else {
        m + b
    }
}

pub struct OracleRanked {
    pub para_id: String,
    pub ordinal: usize,
    pub span: Option<(usize, usize, f64)>,
    pub s_conf: f64,
    pub score: f64,
}

/// Re-ranks paragraphs with both readers set to the lexical oracle.
pub fn oracle_rerank(query: &str, paragraphs: &[Paragraph]) -> Vec<OracleRanked> {
    let mut kws: Vec<String> = Vec::new();
    for t in oracle_tokens(query) {
        if !is_closed_class(&t) && !kws.contains(&t) {
            kws.push(t);
        }
    }
    let mut out: Vec<OracleRanked> = paragraphs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let sents: Vec<(usize, usize)> = p.sentences.iter().map(|s| (s.start, s.end)).collect();
            let span = oracle_lexical(query, &p.text, &sents);
            let s = span.map_or(0.0, |x| x.2);
            let s_conf = oracle_confidence(s, s);
            let toks = oracle_tokens(&p.text);
            let counts: Vec<usize> = kws.iter().map(|k| toks.iter().filter(|t| *t == k).count()).collect();
            let s_freq = counts.iter().sum::<usize>() as f64;
            let s_num = counts.iter().filter(|&&c| c > 0).count() as f64;
            let l = p.text.split_whitespace().count() as f64;
            let s_match = 0.2 * s_freq * oracle_sigmoid(l - 50.0) + 10.0 * s_num;
            OracleRanked {
                para_id: p.para_id.clone(),
                ordinal: i,
                span,
                s_conf,
                score: s_match + 0.5 * s_conf,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(b.s_conf.partial_cmp(&a.s_conf).unwrap())
            .then(a.para_id.cmp(&b.para_id))
    });
    out
}

/// `(mrr, p@1, r@3, n_cases)` for QA records, rescoring every case from
/// scratch. Cases whose answer never occurs are skipped.
pub fn oracle_qa_metrics(records: &[serde_json::Value], paragraph_words: usize) -> (f64, f64, f64, usize) {
    let mut reciprocal = Vec::new();
    for r in records {
        let id = r["id"].as_str().unwrap();
        let q = r["question"].as_str().unwrap();
        let answers: Vec<Vec<String>> = r["answers"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| oracle_tokens(a.as_str().unwrap()))
            .filter(|a| !a.is_empty())
            .collect();
        let doc = Document {
            doc_id: id.into(),
            title: String::new(),
            abstract_text: String::new(),
            body_paragraphs: r["context"]
                .as_str()
                .unwrap()
                .split("\n\n")
                .filter(|b| !b.trim().is_empty())
                .map(str::to_owned)
                .collect(),
            publish_date: None,
            source_uri: None,
        };
        let paras = paragraphs_for(&doc, paragraph_words);
        let golden = |pi: usize, si: usize| {
            let s = paras[pi].sentences[si];
            let text: String = paras[pi].text.chars().skip(s.start).take(s.end - s.start).collect();
            let toks = oracle_tokens(&text);
            answers
                .iter()
                .any(|a| toks.len() >= a.len() && (0..=toks.len() - a.len()).any(|i| toks[i..i + a.len()] == a[..]))
        };
        let any_gold = (0..paras.len()).any(|pi| (0..paras[pi].sentences.len()).any(|si| golden(pi, si)));
        if !any_gold {
            continue;
        }
        let ranked = oracle_rerank(q, &paras);
        let mut rank = None;
        for (k, c) in ranked.iter().enumerate() {
            let p = &paras[c.ordinal];
            let si = c
                .span
                .and_then(|(st, _, _)| p.sentences.iter().position(|s| s.start <= st && st < s.end))
                .unwrap_or(0);
            if golden(c.ordinal, si) {
                rank = Some(k + 1);
                break;
            }
        }
        reciprocal.push(rank);
    }
    let n = reciprocal.len() as f64;
    let mrr = reciprocal.iter().map(|r| r.map_or(0.0, |r| 1.0 / r as f64)).sum::<f64>() / n;
    let p1 = reciprocal.iter().filter(|r| **r == Some(1)).count() as f64 / n;
    let r3 = reciprocal.iter().filter(|r| r.is_some_and(|r| r <= 3)).count() as f64 / n;
    (mrr, p1, r3, reciprocal.len())
}

/// Clipped n-gram counts by linear scan.
pub fn oracle_rouge_n(cand: &[String], refr: &[String], n: usize) -> (f64, f64) {
    let grams = |t: &[String]| -> Vec<Vec<String>> {
        if t.len() < n {
            vec![]
        } else {
            (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect()
        }
    };
    let (c, r) = (grams(cand), grams(refr));
    let mut used = vec![false; r.len()];
    let mut overlap = 0;
    for g in &c {
        if let Some(i) = (0..r.len()).find(|&i| !used[i] && &r[i] == g) {
            used[i] = true;
            overlap += 1;
        }
    }
    let rec = if r.is_empty() { 0.0 } else { overlap as f64 / r.len() as f64 };
    let prec = if c.is_empty() { 0.0 } else { overlap as f64 / c.len() as f64 };
    (rec, prec)
}

/// Full-table LCS.
pub fn oracle_lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] { t[i - 1][j - 1] + 1 } else { t[i - 1][j].max(t[i][j - 1]) };
        }
    }
    t[a.len()][b.len()]
}

/// Every ordered pair at most four words apart, then every unigram, with
/// clipped matching.
pub fn oracle_su4(cand: &[String], refr: &[String]) -> (f64, f64) {
    let units = |t: &[String]| -> Vec<(String, String)> {
        let mut v = Vec::new();
        for i in 0..t.len() {
            for j in i + 1..t.len() {
                if j - i - 1 <= 4 {
                    v.push((t[i].clone(), t[j].clone()));
                }
            }
        }
        for w in t {
            v.push((w.clone(), String::new()));
        }
        v
    };
    let (c, r) = (units(cand), units(refr));
    let mut used = vec![false; r.len()];
    let mut overlap = 0;
    for g in &c {
        if let Some(i) = (0..r.len()).find(|&i| !used[i] && &r[i] == g) {
            used[i] = true;
            overlap += 1;
        }
    }
    let rec = if r.is_empty() { 0.0 } else { overlap as f64 / r.len() as f64 };
    let prec = if c.is_empty() { 0.0 } else { overlap as f64 / c.len() as f64 };
    (rec, prec)
}

pub fn oracle_mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows[0].len();
    (0..d).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64).collect()
}

pub fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn read_jsonl(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}
