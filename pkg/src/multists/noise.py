"""Sequence corruption for the self-translation objective.

Self-translation pairs feed a corrupted copy of the sentence to the
encoder so the model cannot succeed by plain copying. Corruption applies
token dropout followed by a bounded local reordering; the leading
language token and the trailing EOS are never touched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bpe import TokenizedSentence
from .errors import ConfigError


@dataclass
class NoiseConfig:
    drop_prob: float = 0.1
    swap_window: int = 3

    def __post_init__(self):
        if not 0.0 <= self.drop_prob < 1.0:
            raise ConfigError("drop_prob must lie in [0, 1)")
        if self.swap_window < 0:
            raise ConfigError("swap_window must be >= 0")


def corrupt(sentence: TokenizedSentence, config: NoiseConfig,
            rng: np.random.Generator) -> TokenizedSentence:
    """Drop and locally reorder the interior tokens of a sentence.

    Each interior token is deleted with probability ``drop_prob`` (at
    least one always survives). Survivors are then reordered by sorting
    position + U[0, swap_window), which moves no token further than
    ``swap_window`` places.
    """
    interior = sentence.ids[1:-1]
    if not interior:
        return TokenizedSentence(sentence.language, sentence.target_language,
                                 list(sentence.ids))
    keep = rng.random(len(interior)) >= config.drop_prob
    if not keep.any():
        keep[rng.integers(len(interior))] = True
    kept = [tok for tok, k in zip(interior, keep) if k]
    if config.swap_window > 0 and len(kept) > 1:
        jitter = np.arange(len(kept)) + rng.uniform(0, config.swap_window, len(kept))
        kept = [kept[i] for i in np.argsort(jitter, kind="stable")]
    ids = [sentence.ids[0]] + kept + [sentence.ids[-1]]
    return TokenizedSentence(sentence.language, sentence.target_language, ids)
