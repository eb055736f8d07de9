"""Shared-encoder/shared-decoder transformer for multi-direction translation.

A single encoder (one embedding table, one layer stack) serves every
language and direction; routing happens through the target-language token
prepended to the source sentence. The decoder shares its layer stack but
keeps one embedding table and one output projection per language, selected
at run time by the direction's target language.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .bpe import TokenizedSentence
from .errors import ConfigError, DataError, TrainingError

NEG_INF = -1e9


@dataclass
class TransformerConfig:
    d_model: int = 64
    d_embed: int = 64
    d_ff: int = 256
    heads: int = 4
    encoder_layers: int = 2
    decoder_layers: int = 2
    max_len: int = 64
    dropout: float = 0.0

    def __post_init__(self):
        dims = (self.d_model, self.d_embed, self.d_ff, self.heads,
                self.encoder_layers, self.decoder_layers, self.max_len)
        if any(d <= 0 for d in dims):
            raise ConfigError("all transformer dimensions must be positive")
        if self.d_model % self.heads != 0:
            raise ConfigError(
                f"d_model={self.d_model} not divisible by heads={self.heads}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class Linear:
    def __init__(self, rng, fan_in: int, fan_out: int):
        self.w = Tensor(glorot(rng, fan_in, fan_out), requires_grad=True)
        self.b = Tensor(np.zeros(fan_out), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.w + self.b

    def parameters(self, prefix: str):
        yield f"{prefix}.w", self.w
        yield f"{prefix}.b", self.b


class LayerNorm:
    def __init__(self, dim: int, eps: float = 1e-6):
        self.gain = Tensor(np.ones(dim), requires_grad=True)
        self.bias = Tensor(np.zeros(dim), requires_grad=True)
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        mu = x.mean(axis=-1, keepdims=True)
        centered = x - mu
        var = (centered * centered).mean(axis=-1, keepdims=True)
        return centered * (var + self.eps).pow(-0.5) * self.gain + self.bias

    def parameters(self, prefix: str):
        yield f"{prefix}.gain", self.gain
        yield f"{prefix}.bias", self.bias


class MultiHeadAttention:
    def __init__(self, rng, d_model: int, heads: int):
        self.heads = heads
        self.d_head = d_model // heads
        self.wq = Linear(rng, d_model, d_model)
        self.wk = Linear(rng, d_model, d_model)
        self.wv = Linear(rng, d_model, d_model)
        self.wo = Linear(rng, d_model, d_model)

    def _split(self, x: Tensor) -> Tensor:
        b, t, d = x.shape
        return x.reshape(b, t, self.heads, self.d_head).transpose(0, 2, 1, 3)

    def __call__(self, query: Tensor, keys: Tensor, values: Tensor,
                 mask: Tensor | None = None) -> Tensor:
        b, t, d = query.shape
        q = self._split(self.wq(query))
        k = self._split(self.wk(keys))
        v = self._split(self.wv(values))
        scores = (q @ k.swapaxes(-1, -2)) * (1.0 / math.sqrt(self.d_head))
        if mask is not None:
            scores = scores + mask
        mixed = scores.softmax(axis=-1) @ v
        return self.wo(mixed.transpose(0, 2, 1, 3).reshape(b, t, d))

    def parameters(self, prefix: str):
        for name in ("wq", "wk", "wv", "wo"):
            yield from getattr(self, name).parameters(f"{prefix}.{name}")


class FeedForward:
    def __init__(self, rng, d_model: int, d_ff: int):
        self.lin1 = Linear(rng, d_model, d_ff)
        self.lin2 = Linear(rng, d_ff, d_model)

    def __call__(self, x: Tensor) -> Tensor:
        return self.lin2(self.lin1(x).relu())

    def parameters(self, prefix: str):
        yield from self.lin1.parameters(f"{prefix}.lin1")
        yield from self.lin2.parameters(f"{prefix}.lin2")


class EncoderLayer:
    def __init__(self, rng, cfg: TransformerConfig):
        self.attn = MultiHeadAttention(rng, cfg.d_model, cfg.heads)
        self.norm1 = LayerNorm(cfg.d_model)
        self.ffn = FeedForward(rng, cfg.d_model, cfg.d_ff)
        self.norm2 = LayerNorm(cfg.d_model)

    def __call__(self, x: Tensor, mask: Tensor | None) -> Tensor:
        x = self.norm1(x + self.attn(x, x, x, mask))
        return self.norm2(x + self.ffn(x))

    def parameters(self, prefix: str):
        yield from self.attn.parameters(f"{prefix}.attn")
        yield from self.norm1.parameters(f"{prefix}.norm1")
        yield from self.ffn.parameters(f"{prefix}.ffn")
        yield from self.norm2.parameters(f"{prefix}.norm2")


class DecoderLayer:
    def __init__(self, rng, cfg: TransformerConfig):
        self.self_attn = MultiHeadAttention(rng, cfg.d_model, cfg.heads)
        self.norm1 = LayerNorm(cfg.d_model)
        self.cross_attn = MultiHeadAttention(rng, cfg.d_model, cfg.heads)
        self.norm2 = LayerNorm(cfg.d_model)
        self.ffn = FeedForward(rng, cfg.d_model, cfg.d_ff)
        self.norm3 = LayerNorm(cfg.d_model)

    def __call__(self, x: Tensor, memory: Tensor, causal_mask: Tensor,
                 memory_mask: Tensor | None) -> Tensor:
        x = self.norm1(x + self.self_attn(x, x, x, causal_mask))
        x = self.norm2(x + self.cross_attn(x, memory, memory, memory_mask))
        return self.norm3(x + self.ffn(x))

    def parameters(self, prefix: str):
        yield from self.self_attn.parameters(f"{prefix}.self_attn")
        yield from self.norm1.parameters(f"{prefix}.norm1")
        yield from self.cross_attn.parameters(f"{prefix}.cross_attn")
        yield from self.norm2.parameters(f"{prefix}.norm2")
        yield from self.ffn.parameters(f"{prefix}.ffn")
        yield from self.norm3.parameters(f"{prefix}.norm3")


def sinusoidal_encoding(max_len: int, dim: int) -> np.ndarray:
    positions = np.arange(max_len)[:, None]
    freqs = np.exp(-math.log(10000.0) * (np.arange(0, dim, 2) / dim))
    table = np.zeros((max_len, dim))
    table[:, 0::2] = np.sin(positions * freqs)
    table[:, 1::2] = np.cos(positions * freqs[: dim // 2])
    return table


class SharedEncoder:
    """One embedding table and layer stack for every language/direction."""

    def __init__(self, rng, cfg: TransformerConfig, vocab_size: int):
        self.cfg = cfg
        self.embed = Tensor(
            rng.standard_normal((vocab_size, cfg.d_embed)) / math.sqrt(cfg.d_embed),
            requires_grad=True)
        self.embed_proj = (
            Linear(rng, cfg.d_embed, cfg.d_model) if cfg.d_embed != cfg.d_model else None)
        self.positional = sinusoidal_encoding(cfg.max_len, cfg.d_model)
        self.layers = [EncoderLayer(rng, cfg) for _ in range(cfg.encoder_layers)]

    def embed_ids(self, ids: np.ndarray) -> Tensor:
        if ids.shape[-1] > self.cfg.max_len:
            raise DataError(
                f"sequence of length {ids.shape[-1]} exceeds max_len={self.cfg.max_len}")
        x = self.embed.gather_rows(ids) * math.sqrt(self.cfg.d_embed)
        if self.embed_proj is not None:
            x = self.embed_proj(x)
        return x + self.positional[: ids.shape[-1]]

    def run_layers(self, x: Tensor, mask: Tensor | None, start: int = 0,
                   stop: int | None = None) -> Tensor:
        for layer in self.layers[start:stop]:
            x = layer(x, mask)
        return x

    def forward(self, ids: np.ndarray, mask: Tensor | None = None) -> Tensor:
        return self.run_layers(self.embed_ids(ids), mask)

    def encode_sentence(self, ids: list[int]) -> Tensor:
        """Hidden states for one sentence: (len, d_model), one per position."""
        if not ids:
            raise DataError("cannot encode an empty sentence")
        batch = np.asarray([ids], dtype=np.int64)
        return self.forward(batch).reshape(len(ids), self.cfg.d_model)

    def parameters(self):
        yield "encoder.embed", self.embed
        if self.embed_proj is not None:
            yield from self.embed_proj.parameters("encoder.embed_proj")
        for i, layer in enumerate(self.layers):
            yield from layer.parameters(f"encoder.layer{i}")

    def layer_parameters(self, index: int):
        yield from self.layers[index].parameters(f"encoder.layer{index}")


class SharedDecoder:
    """Shared layer stack with per-language embeddings and output heads."""

    def __init__(self, rng, cfg: TransformerConfig, vocab_sizes: dict[str, int]):
        self.cfg = cfg
        self.languages = list(vocab_sizes)
        self.embed = {
            lang: Tensor(
                rng.standard_normal((size, cfg.d_embed)) / math.sqrt(cfg.d_embed),
                requires_grad=True)
            for lang, size in vocab_sizes.items()
        }
        self.embed_proj = (
            Linear(rng, cfg.d_embed, cfg.d_model) if cfg.d_embed != cfg.d_model else None)
        self.positional = sinusoidal_encoding(cfg.max_len, cfg.d_model)
        self.layers = [DecoderLayer(rng, cfg) for _ in range(cfg.decoder_layers)]
        self.out = {lang: Linear(rng, cfg.d_model, size)
                    for lang, size in vocab_sizes.items()}

    def _require_language(self, language: str):
        if language not in self.embed:
            raise ConfigError(f"decoder has no output head for language {language!r}")

    def forward(self, memory: Tensor, memory_mask: Tensor | None,
                prefix_ids: np.ndarray, language: str) -> Tensor:
        """Teacher-forced logits over ``language``'s vocabulary.

        ``prefix_ids`` is (batch, steps); position i attends only to
        positions <= i.
        """
        self._require_language(language)
        steps = prefix_ids.shape[-1]
        if steps > self.cfg.max_len:
            raise DataError(f"decoder prefix of {steps} exceeds max_len={self.cfg.max_len}")
        x = self.embed[language].gather_rows(prefix_ids) * math.sqrt(self.cfg.d_embed)
        if self.embed_proj is not None:
            x = self.embed_proj(x)
        x = x + self.positional[:steps]
        causal = np.triu(np.full((steps, steps), NEG_INF), k=1).reshape(1, 1, steps, steps)
        causal_mask = Tensor(causal)
        for layer in self.layers:
            x = layer(x, memory, causal_mask, memory_mask)
        return self.out[language](x)

    def parameters(self):
        for lang in self.languages:
            yield f"decoder.embed.{lang}", self.embed[lang]
        if self.embed_proj is not None:
            yield from self.embed_proj.parameters("decoder.embed_proj")
        for i, layer in enumerate(self.layers):
            yield from layer.parameters(f"decoder.layer{i}")
        for lang in self.languages:
            yield from self.out[lang].parameters(f"decoder.out.{lang}")


@dataclass
class TranslationExample:
    """One direction-tagged training pair, fully tokenized."""

    source: TokenizedSentence
    target_ids: list[int]
    direction: str

    def __post_init__(self):
        expected = direction_name(self.source.language, self.source.target_language)
        if self.direction != expected:
            raise DataError(
                f"direction {self.direction!r} inconsistent with source tagging {expected!r}")


def direction_name(source_language: str, target_language: str) -> str:
    return f"{source_language}->{target_language}"


def directions_for(languages: list[str]) -> list[str]:
    """All source/target combinations, self-translation included."""
    return [direction_name(a, b) for a in languages for b in languages]


@dataclass
class MtLossWeights:
    """Per-direction mixing weights for the combined translation loss."""

    weights: dict[str, float]

    def __post_init__(self):
        if not self.weights:
            raise ConfigError("loss weights must cover at least one direction")
        if any(v < 0 for v in self.weights.values()):
            raise ConfigError("loss weights must be nonnegative")
        total = sum(self.weights.values())
        if total <= 0:
            raise ConfigError("loss weights must not all be zero")
        self.weights = {k: v / total for k, v in self.weights.items()}

    @classmethod
    def uniform(cls, directions: list[str]) -> "MtLossWeights":
        return cls({d: 1.0 for d in directions})

    def __getitem__(self, direction: str) -> float:
        return self.weights[direction]

    def __contains__(self, direction: str) -> bool:
        return direction in self.weights


def pad_batch(sequences: list[list[int]], pad_id: int) -> np.ndarray:
    width = max(len(s) for s in sequences)
    out = np.full((len(sequences), width), pad_id, dtype=np.int64)
    for i, seq in enumerate(sequences):
        out[i, : len(seq)] = seq
    return out


def padding_mask(ids: np.ndarray, pad_id: int) -> Tensor:
    """Additive attention mask hiding padded key positions."""
    b, t = ids.shape
    return Tensor(np.where(ids == pad_id, NEG_INF, 0.0).reshape(b, 1, 1, t))


class TranslationModel:
    """Shared encoder + shared decoder with language-switched output."""

    def __init__(self, cfg: TransformerConfig, encoder_vocab_size: int,
                 decoder_vocab_sizes: dict[str, int], pad_id: int, bos_id: int,
                 eos_id: int, seed: int):
        rng = np.random.default_rng(seed)
        self.cfg = cfg
        self.encoder = SharedEncoder(rng, cfg, encoder_vocab_size)
        self.decoder = SharedDecoder(rng, cfg, decoder_vocab_sizes)
        self.pad_id = pad_id
        self.bos_id = bos_id
        self.eos_id = eos_id

    def parameters(self):
        yield from self.encoder.parameters()
        yield from self.decoder.parameters()

    def encode(self, sentence: TokenizedSentence) -> Tensor:
        return self.encoder.encode_sentence(sentence.ids)

    def decode_teacher_forced(self, memory: Tensor, prefix_ids: list[int],
                              language: str) -> Tensor:
        """Logits (prefix_len, vocab) for one sentence's decode prefix."""
        batched = memory.reshape(1, *memory.shape)
        prefix = np.asarray([prefix_ids], dtype=np.int64)
        logits = self.decoder.forward(batched, None, prefix, language)
        return logits.reshape(len(prefix_ids), logits.shape[-1])

    def _direction_loss(self, examples: list[TranslationExample], language: str) -> Tensor:
        source_ids = [ex.source.ids for ex in examples]
        src = pad_batch(source_ids, self.pad_id)
        src_mask = padding_mask(src, self.pad_id)
        memory = self.encoder.forward(src, src_mask)
        prefixes = [[self.bos_id] + ex.target_ids[:-1] for ex in examples]
        targets = pad_batch([ex.target_ids for ex in examples], self.pad_id)
        prefix = pad_batch(prefixes, self.pad_id)
        logits = self.decoder.forward(memory, src_mask, prefix, language)
        logp = logits.log_softmax(axis=-1).pick(targets)
        keep = np.zeros(targets.shape)
        for i, ex in enumerate(examples):
            keep[i, : len(ex.target_ids)] = 1.0
        token_count = keep.sum()
        return -(logp * Tensor(keep)).sum() * (1.0 / token_count)

    def mt_loss(self, batch: list[TranslationExample],
                weights: MtLossWeights) -> tuple[Tensor, dict[str, float]]:
        """Weighted sum of per-direction mean-token cross-entropies.

        Returns the combined scalar loss and the raw per-direction
        cross-entropy values; directions absent from the batch contribute
        zero and are absent from the report.
        """
        if not batch:
            raise DataError("mt_loss requires a nonempty batch")
        groups: dict[str, list[TranslationExample]] = {}
        for ex in batch:
            if ex.direction not in weights:
                raise ConfigError(f"no loss weight defined for direction {ex.direction!r}")
            groups.setdefault(ex.direction, []).append(ex)
        total: Tensor | None = None
        per_direction: dict[str, float] = {}
        for direction, examples in groups.items():
            language = examples[0].source.target_language
            ce = self._direction_loss(examples, language)
            per_direction[direction] = ce.item()
            term = ce * weights[direction]
            total = term if total is None else total + term
        if not np.isfinite(total.data).all():
            raise TrainingError("non-finite translation loss")
        return total, per_direction

    def greedy_decode(self, sentence: TokenizedSentence, max_len: int | None = None) -> list[int]:
        """Argmax decoding until EOS; returns target-vocabulary ids."""
        limit = max_len if max_len is not None else self.cfg.max_len
        language = sentence.target_language
        self.decoder._require_language(language)
        memory = self.encode(sentence)
        prefix = [self.bos_id]
        out: list[int] = []
        for _ in range(limit - 1):
            logits = self.decode_teacher_forced(memory, prefix, language)
            nxt = int(np.argmax(logits.data[-1]))
            if nxt == self.eos_id:
                break
            out.append(nxt)
            prefix.append(nxt)
        return out
