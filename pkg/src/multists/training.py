"""Two-stage training: translation pretraining and similarity training.

Every random draw (init, shuffling, corruption, splits) derives from the
single config seed, so a run is reproducible down to checkpoint bytes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, no_grad
from .bpe import TokenizerBundle, detokenize, encode_for_direction, encode_target, normalize
from .checkpoint import Checkpoint, STAGE_MT, apply_parameters, require_stage, verify_fingerprints
from .config import RunConfig
from .data import StsExample, split_holdout
from .ensemble import EnsembleWeights
from .errors import ConfigError, DataError, TrainingError
from .metrics import auc, bleu4, pearson
from .noise import corrupt
from .optim import Adam
from .scoring import SimilarityScorer
from .sts import StsConfig, StsHead
from .transformer import (MtLossWeights, TranslationExample, TranslationModel,
                          direction_name, directions_for)

logger = logging.getLogger(__name__)

# Independent rng streams derived from the run seed.
STREAM_MODEL = 0
STREAM_HEAD = 1
STREAM_HOLDOUT = 2
STREAM_MT_SHUFFLE = 3
STREAM_NOISE = 4
STREAM_STS_SHUFFLE = 5
STREAM_CARVE = 6


def derive_seed(seed: int, stream: int) -> int:
    return seed * 1_000_003 + stream


def build_translation_model(config: RunConfig, bundle: TokenizerBundle) -> TranslationModel:
    vocab = bundle.encoder_vocab
    decoder_sizes = {lang: len(bundle.decoder_vocabs[lang]) for lang in bundle.languages}
    return TranslationModel(
        config.transformer, len(vocab), decoder_sizes,
        pad_id=vocab.pad_id, bos_id=vocab.bos_id, eos_id=vocab.eos_id,
        seed=derive_seed(config.seed, STREAM_MODEL))


def build_sts_head(config: RunConfig) -> StsHead:
    sts = config.sts
    cfg = StsConfig(levels=sts.levels, hidden_units=sts.hidden_units,
                    attn_dim=sts.attn_dim, match_dim=sts.match_dim,
                    compare_dim=sts.compare_dim, aggregation=sts.aggregation)
    return StsHead(cfg, config.transformer.d_model, seed=derive_seed(config.seed, STREAM_HEAD))


# --------------------------------------------------------------------------
# Stage 1: translation pretraining
# --------------------------------------------------------------------------


def direction_examples(direction: str, pairs: list[tuple[str, str]], languages: list[str],
                       bundle: TokenizerBundle, noise_config,
                       rng: np.random.Generator | None) -> list[TranslationExample]:
    """Tokenize one direction's portion of the parallel corpus.

    Self-translation portions reuse the corpus side of their language and
    corrupt the encoder input; cross portions use the corpus as is.
    """
    src_lang, tgt_lang = direction.split("->")
    side = {languages[0]: 0, languages[1]: 1}
    examples = []
    for pair in pairs:
        source_text = pair[side[src_lang]]
        target_text = pair[side[tgt_lang]]
        tokens = encode_for_direction(
            source_text, bundle.encoder_model, bundle.encoder_vocab, src_lang, tgt_lang)
        if src_lang == tgt_lang:
            tokens = corrupt(tokens, noise_config, rng)
        target_ids = encode_target(
            target_text, bundle.decoder_models[tgt_lang], bundle.decoder_vocabs[tgt_lang])
        examples.append(TranslationExample(tokens, target_ids, direction))
    return examples


class _DirectionPool:
    """Seeded shuffled batches of one direction, sized by target tokens.

    Self-translation directions rebuild their examples on every pass so
    corruption is resampled each epoch.
    """

    def __init__(self, build, rng: np.random.Generator, batch_tokens: int,
                 rebuild_each_pass: bool):
        self._build = build
        self._rng = rng
        self._batch_tokens = batch_tokens
        self._rebuild = rebuild_each_pass
        self._examples = None
        self._queue: list[TranslationExample] = []

    def _refill(self):
        if self._examples is None or self._rebuild:
            self._examples = self._build()
        order = self._rng.permutation(len(self._examples))
        self._queue = [self._examples[i] for i in order]

    def next_batch(self) -> list[TranslationExample]:
        if not self._queue:
            self._refill()
        batch: list[TranslationExample] = []
        tokens = 0
        while self._queue and tokens < self._batch_tokens:
            example = self._queue.pop()
            batch.append(example)
            tokens += len(example.target_ids)
        return batch


@dataclass
class PretrainOutcome:
    model: TranslationModel
    weights: MtLossWeights
    history: list[dict] = field(default_factory=list)
    train_pairs: list[tuple[str, str]] = field(default_factory=list)
    holdout_pairs: list[tuple[str, str]] = field(default_factory=list)


def pretrain_mt(config: RunConfig, bundle: TokenizerBundle,
                pairs: list[tuple[str, str]]) -> PretrainOutcome:
    """Train the shared encoder/decoder on the four direction portions."""
    if len(config.languages) != 2:
        raise ConfigError("pretraining expects exactly two languages")
    if not pairs:
        raise DataError("parallel corpus is empty")
    weights = config.mt.weights(config.languages)
    valid = set(directions_for(config.languages))
    unknown = set(weights.weights) - valid
    if unknown:
        raise ConfigError(f"loss weights name unknown directions: {sorted(unknown)}")
    active = [d for d in directions_for(config.languages)
              if d in weights and weights[d] > 0]
    if not active:
        raise ConfigError("all direction weights are zero")

    model = build_translation_model(config, bundle)
    train_pairs, holdout_pairs = split_holdout(
        pairs, config.mt.holdout_fraction, derive_seed(config.seed, STREAM_HOLDOUT))
    noise_rng = np.random.default_rng(derive_seed(config.seed, STREAM_NOISE))
    noise_config = config.mt.noise()

    pools = {}
    for direction in active:
        src, tgt = direction.split("->")
        pools[direction] = _DirectionPool(
            build=(lambda d=direction: direction_examples(
                d, train_pairs, config.languages, bundle, noise_config, noise_rng)),
            rng=np.random.default_rng(
                derive_seed(config.seed, STREAM_MT_SHUFFLE) + active.index(direction)),
            batch_tokens=config.mt.batch_tokens,
            rebuild_each_pass=(src == tgt),
        )

    optimizer = Adam(model.parameters(), learning_rate=config.mt.learning_rate)
    history: list[dict] = []
    for step in range(1, config.mt.steps + 1):
        direction = active[(step - 1) % len(active)]
        batch = pools[direction].next_batch()
        loss, per_direction = model.mt_loss(batch, weights)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        history.append({
            "step": step,
            "direction": direction,
            "loss": loss.item(),
            "cross_entropy": per_direction[direction],
        })
        if step % config.mt.log_every == 0 or step == config.mt.steps:
            logger.info("pretrain step %d/%d %s ce=%.4f",
                        step, config.mt.steps, direction, per_direction[direction])
    return PretrainOutcome(model, weights, history, train_pairs, holdout_pairs)


def translate_corpus(model: TranslationModel, bundle: TokenizerBundle,
                     sentences: list[str], source_language: str,
                     target_language: str) -> list[str]:
    out = []
    with no_grad():
        for text in sentences:
            tokens = encode_for_direction(
                text, bundle.encoder_model, bundle.encoder_vocab,
                source_language, target_language)
            ids = model.greedy_decode(tokens)
            out.append(detokenize(bundle.decoder_vocabs[target_language].ids_to_tokens(ids)))
    return out


def evaluate_direction_bleu(model: TranslationModel, bundle: TokenizerBundle,
                            pairs: list[tuple[str, str]], languages: list[str],
                            direction: str) -> float:
    src_lang, tgt_lang = direction.split("->")
    side = {languages[0]: 0, languages[1]: 1}
    sources = [p[side[src_lang]] for p in pairs]
    references = [" ".join(normalize(p[side[tgt_lang]])) for p in pairs]
    candidates = translate_corpus(model, bundle, sources, src_lang, tgt_lang)
    return bleu4(candidates, references)


def self_translation_bleu(model: TranslationModel, bundle: TokenizerBundle,
                          pairs: list[tuple[str, str]],
                          languages: list[str]) -> dict[str, float]:
    """BLEU of translating each side back into its own language.

    Returns per-direction scores plus an 'overall' corpus score pooling
    both self directions.
    """
    side = {languages[0]: 0, languages[1]: 1}
    all_candidates: list[str] = []
    all_references: list[str] = []
    scores: dict[str, float] = {}
    for lang in languages:
        sources = [p[side[lang]] for p in pairs]
        references = [" ".join(normalize(s)) for s in sources]
        candidates = translate_corpus(model, bundle, sources, lang, lang)
        scores[direction_name(lang, lang)] = bleu4(candidates, references)
        all_candidates.extend(candidates)
        all_references.extend(references)
    scores["overall"] = bleu4(all_candidates, all_references)
    return scores


# --------------------------------------------------------------------------
# Stage 2: similarity training
# --------------------------------------------------------------------------


@dataclass
class StsComponents:
    model: TranslationModel
    head: StsHead
    ensemble_weights: EnsembleWeights | None
    scorer: SimilarityScorer


def prepare_sts_components(config: RunConfig, bundle: TokenizerBundle,
                           mt_checkpoint: Checkpoint | None) -> StsComponents:
    """Build the scoring stack, optionally loading pretrained weights."""
    model = build_translation_model(config, bundle)
    if mt_checkpoint is not None:
        require_stage(mt_checkpoint, STAGE_MT)
        verify_fingerprints(mt_checkpoint, bundle.fingerprints())
        apply_parameters(list(model.parameters()), mt_checkpoint)
    head = build_sts_head(config)
    weights = None
    if config.sts.ensemble.enabled:
        weights = EnsembleWeights(
            config.ensemble_languages(), mode=config.sts.ensemble.beta_mode,
            values=config.sts.ensemble.beta)
    scorer = SimilarityScorer(
        bundle, model.encoder, head, ensemble_weights=weights,
        unfrozen_layers=config.unfrozen_encoder_layers())
    return StsComponents(model, head, weights, scorer)


def sts_trainables(config: RunConfig, components: StsComponents) -> list[tuple[str, Tensor]]:
    """Head and ensemble parameters plus any unfrozen encoder layers."""
    out = list(components.head.parameters())
    if components.ensemble_weights is not None:
        out.extend(components.ensemble_weights.parameters())
    total = config.transformer.encoder_layers
    for index in range(total - config.unfrozen_encoder_layers(), total):
        out.extend(components.model.encoder.layer_parameters(index))
    return out


def sts_checkpoint_params(components: StsComponents) -> list[tuple[str, Tensor]]:
    params = list(components.model.encoder.parameters())
    params.extend(components.head.parameters())
    if components.ensemble_weights is not None:
        params.extend(components.ensemble_weights.parameters())
    return params


def default_dev_metric(metric: str):
    if metric == "auc":
        def auc_metric(golds, ratings, probabilities):
            scores = [p[1] for p in probabilities]
            return auc(scores, [int(g) for g in golds])
        return auc_metric

    def pearson_metric(golds, ratings, probabilities):
        return pearson(ratings, golds)
    return pearson_metric


def evaluate_sts(scorer: SimilarityScorer, examples: list[StsExample],
                 use_ensemble: bool | None = None) -> tuple[list[float], list[np.ndarray]]:
    ratings, probabilities = [], []
    for ex in examples:
        rating, probs = scorer.predict(ex.sentence1, ex.sentence2, ex.language, use_ensemble)
        ratings.append(rating)
        probabilities.append(probs)
    return ratings, probabilities


@dataclass
class StsTrainResult:
    best_step: int
    best_metric: float
    history: list[tuple[int, float]] = field(default_factory=list)
    final_step: int = 0


def train_sts_loop(config: RunConfig, components: StsComponents,
                   train_examples: list[StsExample], dev_examples: list[StsExample],
                   use_ensemble: bool | None = None, metric_fn=None,
                   on_eval=None) -> StsTrainResult:
    """Minimize the rating-KL objective with dev-based early stopping.

    The parameters left in the model afterwards are the dev-best ones.
    """
    if not train_examples:
        raise DataError("no similarity training examples")
    if not dev_examples:
        raise ConfigError("a development split is required for early stopping")
    sts = config.sts
    if metric_fn is None:
        metric_fn = default_dev_metric(sts.metric)
    trainables = sts_trainables(config, components)
    optimizer = Adam(trainables, learning_rate=sts.learning_rate)
    shuffle_rng = np.random.default_rng(derive_seed(config.seed, STREAM_STS_SHUFFLE))
    scorer = components.scorer

    queue: list[StsExample] = []

    def next_batch() -> list[StsExample]:
        nonlocal queue
        batch = []
        while len(batch) < sts.batch_pairs:
            if not queue:
                order = shuffle_rng.permutation(len(train_examples))
                queue = [train_examples[i] for i in order]
            batch.append(queue.pop())
        return batch

    best_metric = -math.inf
    best_step = 0
    best_snapshot: dict[str, np.ndarray] | None = None
    evals_since_best = 0
    history: list[tuple[int, float]] = []
    final_step = 0

    for step in range(1, sts.steps + 1):
        final_step = step
        batch = next_batch()
        total = None
        for ex in batch:
            term = scorer.example_loss(ex, use_ensemble)
            total = term if total is None else total + term
        loss = total * (1.0 / len(batch))
        if not np.isfinite(loss.data).all():
            raise TrainingError(f"non-finite similarity loss at step {step}")
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

        if step % sts.eval_every == 0 or step == sts.steps:
            golds = [ex.gold for ex in dev_examples]
            ratings, probabilities = evaluate_sts(scorer, dev_examples, use_ensemble)
            value = metric_fn(golds, ratings, probabilities)
            history.append((step, value))
            if on_eval is not None:
                on_eval(step, value)
            if value > best_metric:
                best_metric = value
                best_step = step
                best_snapshot = {name: p.data.copy() for name, p in trainables}
                evals_since_best = 0
            else:
                evals_since_best += 1
            logger.info("sts step %d/%d dev %s=%.4f (best %.4f @%d)",
                        step, sts.steps, sts.metric, value, best_metric, best_step)
            if evals_since_best >= sts.patience:
                logger.info("early stop at step %d", step)
                break

    if best_snapshot is not None:
        for name, p in trainables:
            p.data[...] = best_snapshot[name]
    return StsTrainResult(best_step, best_metric, history, final_step)
