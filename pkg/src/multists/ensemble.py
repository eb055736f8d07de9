"""Multilingual-representation ensembling.

The shared encoder maps one sentence into a different semantic space per
supported language simply by switching the prepended language token; no
translation service is involved. Rating distributions predicted from each
space are combined by convex weights.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, stack_rows
from .bpe import SubwordModel, TokenizedSentence, Vocabulary, encode_for_direction
from .errors import ConfigError
from .transformer import SharedEncoder

BETA_MODES = ("fixed", "learnable")


class EnsembleWeights:
    """Convex combination weights over the supported languages.

    ``learnable`` mode keeps unconstrained logits that are softmax-
    normalized on use, so gradients flow through the combination;
    ``fixed`` mode normalizes a given nonnegative array once.
    """

    def __init__(self, languages: list[str], mode: str = "learnable",
                 values: list[float] | None = None):
        if mode not in BETA_MODES:
            raise ConfigError(f"beta mode must be one of {BETA_MODES}")
        if not languages:
            raise ConfigError("ensemble requires at least one language")
        self.languages = list(languages)
        self.mode = mode
        if mode == "fixed":
            if values is None:
                values = [1.0] * len(languages)
            arr = np.asarray(values, dtype=np.float64)
            if arr.shape != (len(languages),):
                raise ConfigError("fixed beta length must match the language list")
            if (arr < 0).any() or arr.sum() <= 0:
                raise ConfigError("fixed beta must be nonnegative with positive sum")
            self.fixed = arr / arr.sum()
            self.logits = None
        else:
            if values is not None:
                raise ConfigError("learnable beta does not take fixed values")
            self.fixed = None
            self.logits = Tensor(np.zeros(len(languages)), requires_grad=True)

    def distribution(self) -> Tensor:
        """Current weights on the simplex, as a tensor of shape (n,)."""
        if self.mode == "fixed":
            return Tensor(self.fixed)
        return self.logits.softmax(axis=0)

    def values(self) -> np.ndarray:
        return self.distribution().data.copy()

    def parameters(self):
        if self.mode == "learnable":
            yield "ensemble.beta_logits", self.logits

    @classmethod
    def one_hot(cls, languages: list[str], language: str) -> "EnsembleWeights":
        if language not in languages:
            raise ConfigError(f"language {language!r} not among {languages}")
        values = [1.0 if lang == language else 0.0 for lang in languages]
        return cls(languages, mode="fixed", values=values)


def multilingual_encode(encoder: SharedEncoder, model: SubwordModel,
                        vocab: Vocabulary, sentence: str, language: str,
                        target_languages: list[str]) -> dict[str, Tensor]:
    """Encode one sentence once per requested semantic space.

    Only the prepended language token differs between the encodings.
    """
    out: dict[str, Tensor] = {}
    for target in target_languages:
        tokens = encode_for_direction(sentence, model, vocab, language, target)
        out[target] = encoder.encode_sentence(tokens.ids)
    return out


def tokenizations_per_language(sentence: str, model: SubwordModel, vocab: Vocabulary,
                               language: str,
                               target_languages: list[str]) -> dict[str, TokenizedSentence]:
    return {
        target: encode_for_direction(sentence, model, vocab, language, target)
        for target in target_languages
    }


def combine_distributions(distributions: list[Tensor], weights: EnsembleWeights) -> Tensor:
    """Convex combination of per-language rating distributions."""
    if len(distributions) != len(weights.languages):
        raise ConfigError("one distribution per ensemble language is required")
    beta = weights.distribution()
    stacked = stack_rows(distributions)
    return (beta.reshape(1, -1) @ stacked).reshape(stacked.shape[1])
