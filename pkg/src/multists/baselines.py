"""Bag-of-words similarity baselines.

Both baselines apply the same preprocessing as the model path (lowercase,
whitespace tokens) and score a pair by cosine similarity.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .bpe import normalize
from .errors import DataError

logger = logging.getLogger(__name__)


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v)) / (nu * nv)


def onehot_cosine(sentence1: str, sentence2: str) -> float:
    """Cosine between word-presence vectors over the pair's vocabulary."""
    words1 = set(normalize(sentence1))
    words2 = set(normalize(sentence2))
    union = sorted(words1 | words2)
    if not union:
        return 0.0
    u = np.array([1.0 if w in words1 else 0.0 for w in union])
    v = np.array([1.0 if w in words2 else 0.0 for w in union])
    return _cosine(u, v)


def load_vector_file(path: Path) -> dict[str, np.ndarray]:
    """Word vectors: one 'word v1 v2 ... vd' line per word, space separated."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as exc:
        raise DataError(f"vector file not found: {path}") from exc
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) < 2:
            raise DataError(f"vector file {path}, line {number}: no values")
        try:
            values = np.array([float(x) for x in parts[1:]])
        except ValueError:
            raise DataError(
                f"vector file {path}, line {number}: non-numeric value") from None
        if dim is None:
            dim = values.size
        elif values.size != dim:
            raise DataError(
                f"vector file {path}, line {number}: dimension {values.size} != {dim}")
        vectors[parts[0]] = values
    if not vectors:
        raise DataError(f"vector file {path} is empty")
    return vectors


def embedding_average_cosine(sentence1: str, sentence2: str,
                             vectors: dict[str, np.ndarray]) -> float:
    """Cosine between mean word vectors; out-of-vocabulary words skipped.

    When either sentence is entirely out of vocabulary the similarity is
    0 and a warning is logged.
    """
    def mean_vector(sentence: str) -> np.ndarray | None:
        hits = [vectors[w] for w in normalize(sentence) if w in vectors]
        if not hits:
            return None
        return np.mean(hits, axis=0)

    u = mean_vector(sentence1)
    v = mean_vector(sentence2)
    if u is None or v is None:
        logger.warning("embedding-average baseline: sentence entirely out of "
                       "vocabulary, similarity set to 0")
        return 0.0
    return _cosine(u, v)


def cosine_to_rating(similarity: float, levels: int) -> float:
    """Map a cosine in [0, 1] onto the rating scale [0, levels]."""
    return max(0.0, min(1.0, similarity)) * levels
