"""Scoring primitives: revised relative-error score, judge-rating correctness,
text-overlap metrics (BLEU-4, ROUGE-L, CIDEr), and Spearman correlation."""

from __future__ import annotations

import math
import re
from collections import Counter
from typing import Sequence


class MetricError(Exception):
    pass


def rel_score(d_gt: float, d_pred: float) -> float:
    """Piecewise relative-error score in [0, 1] for distance answers.

    A stationary ground truth scores 1 only for an exactly stationary
    prediction; otherwise the relative error is clamped into [0, 1] and
    inverted, so over-estimating by the full ground-truth distance (or any
    more) scores 0.
    """
    for name, v in (("d_gt", d_gt), ("d_pred", d_pred)):
        if not math.isfinite(v):
            raise MetricError(f"{name} must be finite")
        if v < 0:
            raise MetricError(f"{name} must be non-negative")
    if d_gt == 0:
        return 1.0 if d_pred == 0 else 0.0
    return 1.0 - min(1.0, abs(d_pred - d_gt) / d_gt)


def correctness_score(ratings: Sequence[int]) -> float:
    """Mean of (s - 1)/4 over 1..5 judge ratings, as a percentage."""
    if not ratings:
        raise MetricError("correctness_score needs at least one rating")
    for s in ratings:
        if not isinstance(s, int) or not (1 <= s <= 5):
            raise MetricError(f"rating {s!r} outside 1..5")
    return sum((s - 1) / 4.0 for s in ratings) / len(ratings) * 100.0


# ---------------------------------------------------------------------------
# Text overlap

def tokenize(text: str) -> list[str]:
    """Lowercase, punctuation stripped, whitespace split."""
    return re.sub(r"[^\w\s]", " ", text.lower()).split()


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(hypothesis: str, references: Sequence[str]) -> float:
    """Sentence BLEU-4: clipped modified precisions, uniform weights, no
    smoothing, brevity penalty against the closest reference length."""
    if not references:
        raise MetricError("bleu4 needs at least one reference")
    hyp = tokenize(hypothesis)
    refs = [tokenize(r) for r in references]
    if not hyp:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        counts = _ngram_counts(hyp, n)
        total = sum(counts.values())
        if total == 0:
            return 0.0
        max_ref = Counter()
        for ref in refs:
            for gram, c in _ngram_counts(ref, n).items():
                if c > max_ref[gram]:
                    max_ref[gram] = c
        clipped = sum(min(c, max_ref[gram]) for gram, c in counts.items())
        if clipped == 0:
            return 0.0
        log_sum += 0.25 * math.log(clipped / total)
    c = len(hyp)
    r = min((abs(len(ref) - c), len(ref)) for ref in refs)[1]
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum)


def rouge_l(hypothesis: str, references: Sequence[str], beta: float = 1.2) -> float:
    """ROUGE-L F-measure (longest common subsequence), max over references."""
    if not references:
        raise MetricError("rouge_l needs at least one reference")
    hyp = tokenize(hypothesis)
    if not hyp:
        return 0.0
    best = 0.0
    for reference in references:
        ref = tokenize(reference)
        if not ref:
            continue
        lcs = _lcs_length(hyp, ref)
        prec = lcs / len(hyp)
        rec = lcs / len(ref)
        if prec + rec == 0:
            continue
        score = ((1 + beta**2) * prec * rec) / (rec + beta**2 * prec)
        best = max(best, score)
    return best


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # rolling single-row DP
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        row = [0] * (len(b) + 1)
        ai = a[i - 1]
        for j in range(1, len(b) + 1):
            if ai == b[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                row[j] = max(prev[j], row[j - 1])
        prev = row
    return prev[-1]


class CiderScorer:
    """CIDEr over a fixed evaluation corpus: tf-idf n-gram cosine (n = 1..4),
    idf from the corpus reference sets, averaged over references, scaled by 10."""

    def __init__(self, corpus_references: Sequence[Sequence[str]]):
        if not corpus_references:
            raise MetricError("CIDEr needs a non-empty reference corpus")
        self.n_docs = len(corpus_references)
        self.df: list[Counter] = [Counter() for _ in range(4)]
        for refs in corpus_references:
            for n in range(1, 5):
                seen: set = set()
                for ref in refs:
                    seen |= set(_ngram_counts(tokenize(ref), n))
                for gram in seen:
                    self.df[n - 1][gram] += 1

    def _vector(self, tokens: Sequence[str], n: int) -> dict:
        vec = {}
        for gram, count in _ngram_counts(tokens, n).items():
            idf = math.log(self.n_docs / max(1.0, float(self.df[n - 1][gram])))
            vec[gram] = count * idf
        return vec

    def score(self, hypothesis: str, references: Sequence[str]) -> float:
        if not references:
            raise MetricError("CIDEr needs at least one reference")
        hyp = tokenize(hypothesis)
        if not hyp:
            return 0.0
        total = 0.0
        for n in range(1, 5):
            hyp_vec = self._vector(hyp, n)
            hyp_norm = math.sqrt(sum(v * v for v in hyp_vec.values()))
            sims = []
            for reference in references:
                ref_vec = self._vector(tokenize(reference), n)
                ref_norm = math.sqrt(sum(v * v for v in ref_vec.values()))
                if hyp_norm == 0 or ref_norm == 0:
                    sims.append(0.0)
                    continue
                dot = sum(v * ref_vec.get(g, 0.0) for g, v in hyp_vec.items())
                sims.append(dot / (hyp_norm * ref_norm))
            total += 10.0 * sum(sims) / len(sims)
        return total / 4.0


def text_overlap(
    hypothesis: str,
    references: Sequence[str],
    cider_scorer: CiderScorer | None = None,
) -> dict[str, float]:
    """BLEU-4, ROUGE-L, and CIDEr for one hypothesis.

    CIDEr idf defaults to this item's references when no run-level scorer is
    supplied; evaluation runs share one scorer built over all references.
    """
    if not references:
        raise MetricError("text_overlap needs at least one reference")
    scorer = cider_scorer or CiderScorer([references])
    return {
        "bleu4": bleu4(hypothesis, references),
        "rougeL": rouge_l(hypothesis, references),
        "cider": scorer.score(hypothesis, references),
    }


# ---------------------------------------------------------------------------
# Rank correlation

def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties.

    Constant inputs have no defined rank correlation and raise instead of
    returning NaN.
    """
    if len(a) != len(b):
        raise MetricError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise MetricError("spearman needs at least two observations")
    if len(set(a)) == 1 or len(set(b)) == 1:
        raise MetricError("spearman undefined for a constant vector")
    ra = _average_ranks(a)
    rb = _average_ranks(b)
    mean_a = sum(ra) / len(ra)
    mean_b = sum(rb) / len(rb)
    cov = sum((x - mean_a) * (y - mean_b) for x, y in zip(ra, rb))
    var_a = sum((x - mean_a) ** 2 for x in ra)
    var_b = sum((y - mean_b) ** 2 for y in rb)
    return cov / math.sqrt(var_a * var_b)
