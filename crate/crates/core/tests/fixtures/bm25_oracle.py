#!/usr/bin/env python3
"""Brute-force BM25 over every paragraph of the fixture corpus. Writes the
expected top-10 lists consumed by the Rust tests."""
import json
import math
import unicodedata
from pathlib import Path

HERE = Path(__file__).parent
K1, B = 0.9, 0.75
WEIGHTS = [("body", 1.0), ("title", 0.5), ("abstract", 0.5)]


def tokens(text):
    text = unicodedata.normalize("NFKC", text).lower()
    out, cur = [], []
    for ch in text:
        if ch.isalnum():
            cur.append(ch)
        elif cur:
            out.append("".join(cur))
            cur = []
    if cur:
        out.append("".join(cur))
    return out


def paragraphs():
    rows = []
    for line in (HERE / "corpus" / "papers.jsonl").read_text().splitlines():
        d = json.loads(line)
        abstract = " ".join(b["text"].strip() for b in d.get("abstract", []) if b["text"].strip())
        for i, block in enumerate(d["body_text"]):
            body = block["text"]
            rows.append({
                "id": f"{d['paper_id']}#{i:05d}",
                "body": tokens(body),
                "title": tokens(d["metadata"]["title"]),
                "abstract": tokens(abstract),
            })
    return rows


def main():
    paras = paragraphs()
    n = len(paras)
    avg = {f: sum(len(p[f]) for p in paras) / n for f, _ in WEIGHTS}
    queries = json.loads((HERE / "bm25_queries.json").read_text())
    expected = []
    for q in queries:
        terms = []
        for t in tokens(q):
            if t not in terms:
                terms.append(t)
        scored = []
        for p in paras:
            score, touched = 0.0, False
            for t in terms:
                for f, w in WEIGHTS:
                    df = sum(1 for o in paras if t in o[f])
                    tf = p[f].count(t)
                    if tf == 0:
                        continue
                    idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
                    norm = 1 - B + B * len(p[f]) / avg[f]
                    score += w * (idf * (tf * (K1 + 1) / (tf + K1 * norm)))
                    touched = True
            if touched:
                scored.append((score, p["id"]))
        scored.sort(key=lambda s: (-s[0], s[1]))
        expected.append({"query": q, "top10": [[pid, s] for s, pid in scored[:10]]})
    (HERE / "bm25_expected.json").write_text(json.dumps(expected, indent=1) + "\n")
    print(f"{n} paragraphs, {len(queries)} queries")


if __name__ == "__main__":
    main()
