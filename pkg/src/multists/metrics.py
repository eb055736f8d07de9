"""Evaluation metrics: Pearson correlation, ROC AUC, corpus BLEU-4."""

from __future__ import annotations

import math
from collections import Counter

import numpy as np

from .errors import DataError, MetricError


def pearson(predictions, golds) -> float:
    """Sample Pearson correlation coefficient in [-1, 1]."""
    x = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(golds, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise MetricError("pearson requires two equal-length 1-d sequences")
    if x.size < 2:
        raise MetricError("pearson requires at least two points")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float((xc * xc).sum()) * float((yc * yc).sum()))
    if denom == 0.0:
        raise MetricError("pearson undefined: zero variance input")
    return float((xc * yc).sum()) / denom


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the average of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i: j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auc(scores, labels) -> float:
    """Rank-based ROC AUC; tied scores contribute one half."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise MetricError("auc requires two equal-length 1-d sequences")
    positives = int((y == 1).sum())
    negatives = int((y == 0).sum())
    if positives + negatives != y.size:
        raise MetricError("labels must be binary 0/1")
    if positives == 0 or negatives == 0:
        raise MetricError("auc undefined: both classes must be present")
    ranks = _average_ranks(s)
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - positives * (positives + 1) / 2.0) / (positives * negatives)


def _ngram_counts(tokens: list[str], order: int) -> Counter:
    return Counter(tuple(tokens[i: i + order]) for i in range(len(tokens) - order + 1))


def bleu4(candidates: list[str], references: list[str]) -> float:
    """Corpus-level case-insensitive BLEU-4 over whitespace tokens.

    Clipped modified n-gram precisions are pooled over the corpus and
    combined by a geometric mean over the orders for which the candidate
    corpus has any n-grams; the brevity penalty uses total lengths.
    """
    if not candidates:
        raise DataError("bleu4 requires a nonempty corpus")
    if len(candidates) != len(references):
        raise DataError("bleu4 requires equal-length candidate/reference lists")
    matched = [0] * 5
    attempted = [0] * 5
    candidate_length = 0
    reference_length = 0
    for cand, ref in zip(candidates, references):
        cand_tokens = cand.lower().split()
        ref_tokens = ref.lower().split()
        candidate_length += len(cand_tokens)
        reference_length += len(ref_tokens)
        for order in range(1, 5):
            counts = _ngram_counts(cand_tokens, order)
            if not counts:
                continue
            ref_counts = _ngram_counts(ref_tokens, order)
            attempted[order] += sum(counts.values())
            matched[order] += sum(min(c, ref_counts[g]) for g, c in counts.items())
    orders = [n for n in range(1, 5) if attempted[n] > 0]
    if not orders or any(matched[n] == 0 for n in orders):
        return 0.0
    log_precision = sum(math.log(matched[n] / attempted[n]) for n in orders) / len(orders)
    if candidate_length >= reference_length:
        brevity = 1.0
    else:
        brevity = math.exp(1.0 - reference_length / candidate_length)
    return brevity * math.exp(log_precision)
