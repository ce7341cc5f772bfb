#!/usr/bin/env python3
"""Reference values for the metric and statistics unit tests.

Everything here is computed the slow, obvious way (or with scipy/zlib) and
written to tests/data/oracle_values.json, which the C++ tests read.

usage: metrics_ref.py tests/data/fixture50.jsonl tests/data/oracle_values.json
"""

import json
import math
import sys
import zlib
from collections import Counter

import numpy as np
from scipy import stats


def words(text):
    # lowercase letter runs; an apostrophe between a letter run and a letter stays
    out, cur = [], ""
    for i, ch in enumerate(text):
        if ch.isascii() and ch.isalpha():
            cur += ch.lower()
        elif ch in "'’" and cur and i + 1 < len(text) and text[i + 1].isascii() and text[i + 1].isalpha():
            cur += "'"
        elif cur:
            out.append(cur)
            cur = ""
    if cur:
        out.append(cur)
    return out


def ngrams(toks, n):
    return [tuple(toks[i:i + n]) for i in range(len(toks) - n + 1)]


def bleu(cand, refs, max_n=4):
    c = len(cand)
    orders = min(max_n, c)
    logs = 0.0
    for n in range(1, orders + 1):
        cc = Counter(ngrams(cand, n))
        clipped = 0
        for g, k in cc.items():
            clipped += min(k, max(Counter(ngrams(r, n))[g] for r in refs))
        if clipped == 0:
            return 0.0
        logs += math.log(clipped / (c - n + 1))
    r = min((abs(len(x) - c), len(x)) for x in refs)[1]
    bp = math.exp(1 - r / c) if c < r else 1.0
    return bp * math.exp(logs / orders)


def split_sentences(t):
    # . ! ? then optional closing quotes/bracket, then whitespace or end
    out, start, i = [], 0, 0
    while i < len(t):
        if t[i] in ".!?":
            j = i + 1
            while j < len(t) and t[j] in "\"')\u201d\u2019":
                j += 1
            if j == len(t) or t[j].isspace():
                out.append(t[start:j].strip())
                start = i = j
                continue
        i += 1
    out.append(t[start:].strip())
    return [s for s in out if s]


def syllables(w):
    w = "".join(ch for ch in w.lower() if ch.isalpha())
    groups, prev = 0, False
    for ch in w:
        v = ch in "aeiouy"
        if v and not prev:
            groups += 1
        prev = v
    if len(w) >= 2 and w[-1] == "e" and w[-2] != "l":
        groups -= 1
    return max(groups, 1)


def main():
    texts = [json.loads(l)["text"] for l in open(sys.argv[1], encoding="utf-8") if l.strip()]
    corpus = [words(t) for t in texts]
    out = {}

    ngd = {}
    for n in range(1, 11):
        grams = [g for s in corpus for g in ngrams(s, n)]
        per = [len(set(ngrams(s, n))) / len(ngrams(s, n)) for s in corpus if len(s) >= n]
        ngd[str(n)] = {"distinct": len(set(grams)), "total": len(grams), "story_mean": float(np.mean(per))}
    out["ngd"] = ngd

    joined = "\n".join(texts).encode("utf-8")
    out["compression"] = {"original": len(joined), "compressed": len(zlib.compress(joined, 6))}

    per_story = [bleu(corpus[i], corpus[:i] + corpus[i + 1:]) for i in range(len(corpus))]
    out["self_bleu"] = {"mean": sum(per_story) / len(per_story), "per_story": per_story}

    fr = Counter()
    for s in corpus:
        fr.update(set(ngrams(s, 4)))
    top = sorted(fr.items(), key=lambda kv: (-kv[1], kv[0]))[:10]
    out["fourgram_top10"] = [{"ngram": " ".join(g), "stories": k} for g, k in top]

    out["word_counts"] = [len(s) for s in corpus]

    # statistics
    st = {}
    f, p = stats.f_oneway([1, 2, 3], [4, 5, 6])
    st["anova_123_456"] = {"F": f, "p": p}
    f, p = stats.f_oneway([2.5, 3.1, 4.7, 3.3], [5.1, 4.9, 6.2], [1.0, 2.2, 1.7, 2.9, 3.0])
    st["anova_three"] = {"F": f, "p": p}
    t, p = stats.ttest_ind([3.1, 2.4, 5.0, 4.4, 3.9], [5.5, 6.1, 4.8, 7.0], equal_var=True)
    st["t_pooled"] = {"t": t, "p": p}
    t, p = stats.ttest_1samp([0, 1, 1, 0, 1, 1, 1, 0, 1, 1], 0.25)
    st["t_one_sample"] = {"t": t, "p": p}
    st["t_p"] = [{"t": t, "df": df, "p": 2 * stats.t.sf(abs(t), df)}
                 for t, df in [(0.5, 3), (2.0, 7.5), (-3.3, 12), (10.0, 40), (1.96, 1e6)]]
    st["f_p"] = [{"f": f, "df1": a, "df2": b, "p": stats.f.sf(f, a, b)}
                 for f, a, b in [(1.0, 2, 10), (4.2, 3, 40), (0.2, 1, 5), (25.0, 4, 100)]]
    st["betainc"] = [{"a": a, "b": b, "x": x, "v": __import__("scipy").special.betainc(a, b, x)}
                     for a, b, x in [(0.5, 0.5, 0.3), (2, 3, 0.4), (10, 20, 0.35), (150, 200, 0.43), (1, 1, 0.77)]]
    st["normal_quantile"] = [{"p": p, "z": stats.norm.ppf(p)} for p in [0.9995, 0.975, 0.5, 1e-10, 0.999999]]
    st["chi_square"] = {"counts": [12, 9, 11, 8, 15, 10, 9, 13, 13]}
    c = np.array(st["chi_square"]["counts"], dtype=float)
    chi, p = stats.chisquare(c)
    st["chi_square"].update({"stat": chi, "p": p})
    out["stats"] = st

    fk = []
    for t in texts[:10]:
        w = words(t)
        sents = [s for s in split_sentences(t) if words(s)]
        syl = sum(syllables(x) for x in w)
        fk.append(0.39 * len(w) / len(sents) + 11.8 * syl / len(w) - 15.59)
    out["fk_first10"] = fk

    with open(sys.argv[2], "w") as f:
        json.dump(out, f, indent=1)


if __name__ == "__main__":
    main()
