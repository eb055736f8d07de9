"""Assembled similarity scorer: tokenizer -> shared encoder -> head -> ensemble.

Encoder layers below the unfrozen split never change during STS training,
so their outputs are computed once per distinct (space, sentence) and
cached as plain arrays; only the unfrozen suffix and the head run on the
gradient tape.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, no_grad
from .bpe import TokenizerBundle, encode_for_direction
from .ensemble import EnsembleWeights, combine_distributions
from .errors import ConfigError
from .sts import StsHead, kl_divergence, predicted_rating, sparse_target
from .transformer import SharedEncoder


class SimilarityScorer:
    def __init__(self, bundle: TokenizerBundle, encoder: SharedEncoder, head: StsHead,
                 ensemble_weights: EnsembleWeights | None = None,
                 unfrozen_layers: int = 0):
        if ensemble_weights is not None:
            unknown = set(ensemble_weights.languages) - set(bundle.languages)
            if unknown:
                raise ConfigError(f"ensemble languages without tokenizer: {sorted(unknown)}")
        self.bundle = bundle
        self.encoder = encoder
        self.head = head
        self.ensemble_weights = ensemble_weights
        if not 0 <= unfrozen_layers <= len(encoder.layers):
            raise ConfigError("unfrozen_layers out of range")
        self.split = len(encoder.layers) - unfrozen_layers
        self._prefix_cache: dict[tuple[int, ...], np.ndarray] = {}

    def sentence_states(self, sentence: str, language: str, space: str) -> Tensor:
        """Encoder states for ``sentence`` in ``space``'s semantic space."""
        tokens = encode_for_direction(
            sentence, self.bundle.encoder_model, self.bundle.encoder_vocab,
            language, space)
        return self.states_for_ids(tokens.ids)

    def states_for_ids(self, ids: list[int]) -> Tensor:
        key = tuple(ids)
        prefix = self._prefix_cache.get(key)
        if prefix is None:
            with no_grad():
                x = self.encoder.embed_ids(np.asarray([ids], dtype=np.int64))
                x = self.encoder.run_layers(x, None, start=0, stop=self.split)
            prefix = x.data
            self._prefix_cache[key] = prefix
        states = Tensor(prefix)
        if self.split < len(self.encoder.layers):
            states = self.encoder.run_layers(states, None, start=self.split)
        return states.reshape(len(ids), self.encoder.cfg.d_model)

    def pair_distribution(self, sentence1: str, sentence2: str, language: str,
                          space: str) -> Tensor:
        states1 = self.sentence_states(sentence1, language, space)
        states2 = self.sentence_states(sentence2, language, space)
        return self.head.forward(states1, states2)

    def ensemble_distribution(self, sentence1: str, sentence2: str,
                              language: str) -> Tensor:
        if self.ensemble_weights is None:
            raise ConfigError("scorer was built without ensemble weights")
        distributions = [
            self.pair_distribution(sentence1, sentence2, language, space)
            for space in self.ensemble_weights.languages
        ]
        return combine_distributions(distributions, self.ensemble_weights)

    def distribution(self, sentence1: str, sentence2: str, language: str,
                     use_ensemble: bool | None = None) -> Tensor:
        """Rating distribution for a pair.

        With the ensemble off, the pair is scored in its own language's
        semantic space, which is exactly the one-hot ensemble.
        """
        use = self.ensemble_weights is not None if use_ensemble is None else use_ensemble
        if use:
            return self.ensemble_distribution(sentence1, sentence2, language)
        return self.pair_distribution(sentence1, sentence2, language, language)

    def predict(self, sentence1: str, sentence2: str, language: str,
                use_ensemble: bool | None = None) -> tuple[float, np.ndarray]:
        with no_grad():
            dist = self.distribution(sentence1, sentence2, language, use_ensemble)
        return predicted_rating(dist), dist.data.copy()

    def example_loss(self, example, use_ensemble: bool | None = None) -> Tensor:
        target = sparse_target(example.gold, self.head.cfg.levels)
        dist = self.distribution(
            example.sentence1, example.sentence2, example.language, use_ensemble)
        return kl_divergence(target, dist)

    def clear_cache(self):
        self._prefix_cache.clear()
