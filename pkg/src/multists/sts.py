"""Sentence-pair similarity head over frozen encoder states.

The head pools each sentence with a self-attentive aggregator, soft-aligns
the two sentences against each other, splits every position into the
component parallel to its alignment (the similar part) and the orthogonal
remainder (the dissimilar part), compares and average-pools those, and
maps the combined pair representation to a probability distribution over
discrete similarity levels. Training minimizes KL divergence against a
sparse two-level encoding of the gold rating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, concat
from .errors import ConfigError, DataError, ShapeError
from .transformer import Linear

PROB_FLOOR = 1e-12
ZERO_NORM_THRESHOLD = 1e-12

AGGREGATIONS = ("self_attention", "max", "mean")


@dataclass
class StsConfig:
    levels: int = 5            # ratings live in [0, levels]
    hidden_units: int = 300    # width of the output layer's first layer
    attn_dim: int | None = None
    match_dim: int | None = None
    compare_dim: int | None = None
    aggregation: str = "self_attention"

    def __post_init__(self):
        if self.levels < 1:
            raise ConfigError("levels must be >= 1")
        if self.hidden_units < 1:
            raise ConfigError("hidden_units must be >= 1")
        if self.aggregation not in AGGREGATIONS:
            raise ConfigError(f"aggregation must be one of {AGGREGATIONS}")


class TwoLayerTanh:
    """Two-layer feed-forward network with tanh after each layer."""

    def __init__(self, rng, fan_in: int, hidden: int, fan_out: int):
        self.lin1 = Linear(rng, fan_in, hidden)
        self.lin2 = Linear(rng, hidden, fan_out)

    def __call__(self, x: Tensor) -> Tensor:
        return self.lin2(self.lin1(x).tanh()).tanh()

    def parameters(self, prefix: str):
        yield from self.lin1.parameters(f"{prefix}.lin1")
        yield from self.lin2.parameters(f"{prefix}.lin2")


class SelfAttentivePooling:
    """Score each position with a small MLP and softmax-pool the states."""

    def __init__(self, rng, d_model: int, attn_dim: int):
        self.proj = Linear(rng, d_model, attn_dim)
        self.query = Tensor(np.zeros(attn_dim), requires_grad=True)

    def __call__(self, states: Tensor) -> Tensor:
        if states.shape[0] == 0:
            raise DataError("cannot pool an empty state sequence")
        scores = self.proj(states).tanh() @ self.query.reshape(-1, 1)
        weights = scores.reshape(-1).softmax(axis=0)
        return (weights.reshape(1, -1) @ states).reshape(states.shape[1])

    def attention_weights(self, states: Tensor) -> np.ndarray:
        scores = self.proj(states).tanh() @ self.query.reshape(-1, 1)
        return scores.reshape(-1).softmax(axis=0).data

    def parameters(self, prefix: str):
        yield from self.proj.parameters(f"{prefix}.proj")
        yield f"{prefix}.query", self.query


def soft_align(states1: Tensor, states2: Tensor,
               match_net) -> tuple[Tensor, Tensor, Tensor]:
    """Cross-sentence soft alignment.

    Returns (alignment scores e, matched states for sentence 1, matched
    states for sentence 2): each position of one sentence is the
    softmax-weighted mixture of the other sentence's states.
    """
    if states1.shape[0] == 0 or states2.shape[0] == 0:
        raise DataError("cannot align an empty sentence")
    m1 = match_net(states1)
    m2 = match_net(states2)
    scores = m1 @ m2.transpose()
    matched1 = scores.softmax(axis=1) @ states2
    matched2 = scores.softmax(axis=0).transpose() @ states1
    return scores, matched1, matched2


def orthogonal_decompose(states: Tensor, matched: Tensor) -> tuple[Tensor, Tensor]:
    """Split states into components parallel and perpendicular to ``matched``.

    Positions whose matched vector has (near-)zero norm get a zero
    parallel part and keep the full state as the perpendicular part.
    """
    if states.shape != matched.shape:
        raise ShapeError(f"decompose shapes disagree: {states.shape} vs {matched.shape}")
    overlap = (states * matched).sum(axis=-1, keepdims=True)
    norm_sq = (matched * matched).sum(axis=-1, keepdims=True)
    nonzero = (norm_sq.data >= ZERO_NORM_THRESHOLD ** 2).astype(np.float64)
    gate = Tensor(nonzero)
    ratio = (overlap * gate) / (norm_sq * gate + (1.0 - nonzero))
    parallel = ratio * matched
    return parallel, states - parallel


def compare_and_pool(parallel: Tensor, perpendicular: Tensor, compare_net) -> Tensor:
    """Feed (similar, dissimilar) pairs through the comparison net and
    average-pool over positions."""
    if parallel.shape[0] == 0:
        raise DataError("cannot pool an empty sequence")
    features = compare_net(concat([parallel, perpendicular], axis=-1))
    return features.mean(axis=0)


class OutputLayer:
    """Two-layer relu->softmax map from pair representation to levels."""

    def __init__(self, rng, fan_in: int, hidden_units: int, levels: int):
        self.hidden = Linear(rng, fan_in, hidden_units)
        self.out = Linear(rng, hidden_units, levels + 1)

    def __call__(self, pair_repr: Tensor) -> Tensor:
        hidden = self.hidden(pair_repr.reshape(1, -1)).relu()
        return self.out(hidden).reshape(-1).softmax(axis=0)

    def parameters(self, prefix: str):
        yield from self.hidden.parameters(f"{prefix}.hidden")
        yield from self.out.parameters(f"{prefix}.out")


class StsHead:
    """All trainable similarity parameters on top of encoder states."""

    def __init__(self, cfg: StsConfig, d_model: int, seed: int):
        rng = np.random.default_rng(seed)
        self.cfg = cfg
        self.d_model = d_model
        attn_dim = cfg.attn_dim or d_model
        match_dim = cfg.match_dim or d_model
        self.compare_dim = cfg.compare_dim or d_model
        self.pooling = SelfAttentivePooling(rng, d_model, attn_dim)
        self.match_net = TwoLayerTanh(rng, d_model, match_dim, match_dim)
        self.compare_net = TwoLayerTanh(rng, 2 * d_model, match_dim, self.compare_dim)
        pair_width = 2 * d_model + 2 * self.compare_dim
        self.output = OutputLayer(rng, pair_width, cfg.hidden_units, cfg.levels)

    def aggregate(self, states: Tensor) -> Tensor:
        if self.cfg.aggregation == "self_attention":
            return self.pooling(states)
        if self.cfg.aggregation == "max":
            return states.max(axis=0)
        return states.mean(axis=0)

    def interaction(self, states1: Tensor, states2: Tensor) -> tuple[Tensor, Tensor]:
        _, matched1, matched2 = soft_align(states1, states2, self.match_net)
        par1, perp1 = orthogonal_decompose(states1, matched1)
        par2, perp2 = orthogonal_decompose(states2, matched2)
        pooled1 = compare_and_pool(par1, perp1, self.compare_net)
        pooled2 = compare_and_pool(par2, perp2, self.compare_net)
        return pooled1, pooled2

    def pair_representation(self, states1: Tensor, states2: Tensor) -> Tensor:
        own1 = self.aggregate(states1)
        own2 = self.aggregate(states2)
        cross1, cross2 = self.interaction(states1, states2)
        return concat([(own1 - own2).abs(), own1 * own2, cross1, cross2], axis=0)

    def forward(self, states1: Tensor, states2: Tensor) -> Tensor:
        """Rating distribution (levels + 1 probabilities) for one pair."""
        return self.output(self.pair_representation(states1, states2))

    def parameters(self):
        if self.cfg.aggregation == "self_attention":
            yield from self.pooling.parameters("sts.pooling")
        yield from self.match_net.parameters("sts.match")
        yield from self.compare_net.parameters("sts.compare")
        yield from self.output.parameters("sts.output")


def rating_levels(levels: int) -> np.ndarray:
    return np.arange(levels + 1, dtype=np.float64)


def sparse_target(rating: float, levels: int) -> np.ndarray:
    """Encode a real rating as mass on its two neighbouring levels."""
    if not 0.0 <= rating <= levels:
        raise DataError(f"rating {rating} outside [0, {levels}]")
    target = np.zeros(levels + 1)
    lower = int(math.floor(rating))
    if lower == levels:
        target[levels] = 1.0
    else:
        target[lower] = lower + 1.0 - rating
        target[lower + 1] = rating - lower
    return target


def predicted_rating(distribution) -> float:
    """Expected level under a rating distribution."""
    probs = distribution.data if isinstance(distribution, Tensor) else np.asarray(distribution)
    return float(np.dot(rating_levels(probs.shape[-1] - 1), probs))


def kl_divergence(target: np.ndarray, predicted: Tensor) -> Tensor:
    """KL(target || predicted) with the prediction floored at 1e-12.

    Zero-probability target entries contribute zero.
    """
    target = np.asarray(target, dtype=np.float64)
    entropy_part = float(np.sum(target[target > 0] * np.log(target[target > 0])))
    cross_part = (Tensor(target) * predicted.clamp_min(PROB_FLOOR).log()).sum()
    return entropy_part - cross_part
