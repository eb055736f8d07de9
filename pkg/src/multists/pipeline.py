"""End-to-end command implementations shared by the CLI and the tests.

Each command reads what it needs from the run configuration, executes,
and writes its outputs (checkpoints, TSV tables, figures, report.json
with full config/seed provenance) under an output directory.
"""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from .baselines import embedding_average_cosine, load_vector_file, onehot_cosine
from .bpe import TokenizerBundle
from .checkpoint import (Checkpoint, STAGE_MT, STAGE_STS, apply_parameters,
                         load_checkpoint, require_stage, save_checkpoint,
                         verify_fingerprints)
from .config import RunConfig
from .data import StsExample, carve_dev_split, load_parallel_tsv, load_sts_tsv
from .errors import ConfigError, DataError
from .metrics import auc, pearson
from .report import (moving_average, render_grouped_bars, render_lines,
                     render_scatter, write_json, write_tsv)
from .training import (STREAM_CARVE, derive_seed, evaluate_direction_bleu,
                       evaluate_sts, prepare_sts_components, pretrain_mt,
                       self_translation_bleu, sts_checkpoint_params,
                       train_sts_loop)
from .transformer import directions_for

ABLATION_ROWS = ("rich-only", "low-only", "rich+low", "rich+low+multilingual")
ABLATION_COLUMNS = ("scratch", "pretrained")


def load_bundle(config: RunConfig) -> TokenizerBundle:
    if not config.paths.tokenizer_dir:
        raise ConfigError("paths.tokenizer_dir is not configured")
    return TokenizerBundle.load(
        Path(config.paths.tokenizer_dir), config.languages,
        config.tokenizer.encoder_vocab_size, config.tokenizer.decoder_vocab_size)


def run_bpe_train(config: RunConfig, out_dir: Path) -> dict:
    """Learn the shared encoder-side and per-language decoder-side models."""
    if len(config.languages) != 2:
        raise ConfigError("tokenizer training expects exactly two languages")
    if not config.paths.parallel_corpus:
        raise ConfigError("paths.parallel_corpus is not configured")
    pairs = load_parallel_tsv(Path(config.paths.parallel_corpus))
    first, second = config.languages
    sentences = {
        first: [a for a, _ in pairs],
        second: [b for _, b in pairs],
    }
    bundle = TokenizerBundle.train(
        sentences, config.tokenizer.encoder_merges, config.tokenizer.decoder_merges,
        config.tokenizer.encoder_vocab_size, config.tokenizer.decoder_vocab_size)
    out_dir = Path(out_dir)
    bundle.save(out_dir)
    summary = {
        "config": config.to_dict(),
        "seed": config.seed,
        "encoder_vocab": len(bundle.encoder_vocab),
        "decoder_vocab": {lang: len(v) for lang, v in bundle.decoder_vocabs.items()},
        "fingerprints": bundle.fingerprints(),
    }
    write_json(out_dir / "tokenizer.json", summary)
    return summary


def run_pretrain(config: RunConfig, out_dir: Path) -> dict:
    """Stage 1: train the shared translation model and checkpoint it."""
    bundle = load_bundle(config)
    if not config.paths.parallel_corpus:
        raise ConfigError("paths.parallel_corpus is not configured")
    pairs = load_parallel_tsv(Path(config.paths.parallel_corpus))
    outcome = pretrain_mt(config, bundle, pairs)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    checkpoint_dir = out_dir / "checkpoint"
    save_checkpoint(checkpoint_dir, STAGE_MT, list(outcome.model.parameters()),
                    config.to_dict(), bundle.fingerprints())

    write_tsv(out_dir / "pretrain_curves.tsv",
              ["step", "direction", "cross_entropy", "weighted_loss"],
              [(r["step"], r["direction"], f"{r['cross_entropy']:.6f}",
                f"{r['loss']:.6f}") for r in outcome.history])
    series = {}
    for direction in directions_for(config.languages):
        rows = [r for r in outcome.history if r["direction"] == direction]
        if rows:
            series[direction] = ([r["step"] for r in rows],
                                 moving_average([r["cross_entropy"] for r in rows], 10))
    render_lines(out_dir / "pretrain_curves.png", series,
                 "translation pretraining", "step", "cross entropy (ma-10)")

    bleu_scores = {}
    eval_pairs = outcome.holdout_pairs if outcome.holdout_pairs else outcome.train_pairs
    slice_name = "holdout" if outcome.holdout_pairs else "train"
    for direction in directions_for(config.languages):
        if direction in outcome.weights and outcome.weights[direction] > 0:
            bleu_scores[direction] = evaluate_direction_bleu(
                outcome.model, bundle, eval_pairs, config.languages, direction)
    write_tsv(out_dir / "bleu.tsv", ["direction", "slice", "bleu4"],
              [(d, slice_name, f"{v:.6f}") for d, v in bleu_scores.items()])

    losses = [r["loss"] for r in outcome.history]
    summary = {
        "config": config.to_dict(),
        "seed": config.seed,
        "steps": len(outcome.history),
        "bleu_slice": slice_name,
        "bleu": bleu_scores,
        "loss_start_ma100": float(np.mean(losses[:100])),
        "loss_end_ma100": float(np.mean(losses[-100:])),
        "checkpoint": str(checkpoint_dir),
    }
    write_json(out_dir / "report.json", summary)
    return summary


def collect_sts_data(config: RunConfig) -> tuple[list[StsExample], list[StsExample]]:
    """Training and development examples for every configured language.

    A language with an explicit dev file uses it; otherwise a seeded
    fraction of its training data is carved out.
    """
    train_examples: list[StsExample] = []
    dev_examples: list[StsExample] = []
    for lang in config.languages:
        entry = config.paths.sts_data.get(lang)
        if not entry:
            continue
        if "train" not in entry:
            raise ConfigError(f"paths.sts_data[{lang!r}] has no train file")
        train = load_sts_tsv(Path(entry["train"]), lang, config.sts.levels)
        if "dev" in entry:
            dev = load_sts_tsv(Path(entry["dev"]), lang, config.sts.levels, "dev")
        else:
            train, dev = carve_dev_split(
                train, config.sts.dev_fraction, derive_seed(config.seed, STREAM_CARVE))
        train_examples.extend(train)
        dev_examples.extend(dev)
    if not train_examples:
        raise DataError("no similarity training data configured")
    return train_examples, dev_examples


def run_sts_train(config: RunConfig, out_dir: Path,
                  mt_checkpoint_dir: Path | None) -> dict:
    """Stage 2: train the similarity head on top of the (frozen) encoder."""
    bundle = load_bundle(config)
    mt_checkpoint = None
    if mt_checkpoint_dir is not None:
        mt_checkpoint = load_checkpoint(Path(mt_checkpoint_dir))
    components = prepare_sts_components(config, bundle, mt_checkpoint)
    train_examples, dev_examples = collect_sts_data(config)
    result = train_sts_loop(config, components, train_examples, dev_examples)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint_dir = out_dir / "checkpoint"
    save_checkpoint(checkpoint_dir, STAGE_STS, sts_checkpoint_params(components),
                    config.to_dict(), bundle.fingerprints())

    write_tsv(out_dir / "dev_curve.tsv", ["step", f"dev_{config.sts.metric}"],
              [(s, f"{v:.6f}") for s, v in result.history])
    render_lines(out_dir / "dev_curve.png",
                 {f"dev {config.sts.metric}": ([s for s, _ in result.history],
                                               [v for _, v in result.history])},
                 "similarity training", "step", config.sts.metric)
    summary = {
        "config": config.to_dict(),
        "seed": config.seed,
        "pretrained": mt_checkpoint_dir is not None and str(mt_checkpoint_dir) or None,
        "best_step": result.best_step,
        "best_dev_metric": result.best_metric,
        "steps_run": result.final_step,
        "checkpoint": str(checkpoint_dir),
    }
    write_json(out_dir / "report.json", summary)
    return summary


def load_scoring_stack(checkpoint_dir: Path, paths_config: RunConfig | None = None):
    """Rebuild a scorer from an STS checkpoint.

    Model hyperparameters always come from the checkpoint's embedded
    config; ``paths_config`` (when given) supplies the file locations.
    """
    checkpoint = load_checkpoint(Path(checkpoint_dir))
    require_stage(checkpoint, STAGE_STS)
    config = RunConfig.from_dict(checkpoint.config)
    if paths_config is not None:
        merged = config.to_dict()
        merged["paths"] = paths_config.to_dict()["paths"]
        config = RunConfig.from_dict(merged)
    bundle = load_bundle(config)
    verify_fingerprints(checkpoint, bundle.fingerprints())
    components = prepare_sts_components(config, bundle, None)
    apply_parameters(sts_checkpoint_params(components), checkpoint)
    return config, bundle, components


def _metric_value(config: RunConfig, golds: list[float], ratings: list[float],
                  probabilities: list[np.ndarray]) -> float:
    if config.sts.metric == "auc":
        return auc([p[1] for p in probabilities], [int(g) for g in golds])
    return pearson(ratings, golds)


def run_eval(checkpoint_dir: Path, data_path: Path, language: str, out_dir: Path,
             use_ensemble: bool | None = None,
             paths_config: RunConfig | None = None) -> dict:
    """Score a labeled file and report the configured metric."""
    config, _, components = load_scoring_stack(checkpoint_dir, paths_config)
    if language not in config.languages:
        raise ConfigError(f"language {language!r} not configured: {config.languages}")
    examples = load_sts_tsv(Path(data_path), language, config.sts.levels, "test")
    ratings, probabilities = evaluate_sts(components.scorer, examples, use_ensemble)
    golds = [ex.gold for ex in examples]
    value = _metric_value(config, golds, ratings, probabilities)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    levels = config.sts.levels
    header = ["sentence1", "sentence2", "gold", "rating"] + [
        f"p{j}" for j in range(levels + 1)]
    rows = []
    for ex, rating, probs in zip(examples, ratings, probabilities):
        rows.append((ex.sentence1, ex.sentence2, ex.gold, f"{rating:.6f}",
                     *(f"{p:.6f}" for p in probs)))
    write_tsv(out_dir / "predictions.tsv", header, rows)
    render_scatter(out_dir / "predictions.png", golds, ratings,
                   "gold vs predicted", "gold", "predicted rating")
    write_tsv(out_dir / "metrics.tsv", ["metric", "value"],
              [(config.sts.metric, f"{value:.6f}")])
    summary = {
        "config": config.to_dict(),
        "seed": config.seed,
        "data": str(data_path),
        "language": language,
        "metric": config.sts.metric,
        "value": value,
        "pairs": len(examples),
    }
    write_json(out_dir / "report.json", summary)
    return summary


def run_score(checkpoint_dir: Path, out_dir: Path, language: str,
              input_path: Path | None = None,
              sentence_pair: tuple[str, str] | None = None,
              use_ensemble: bool | None = None, include_probs: bool = False,
              paths_config: RunConfig | None = None) -> dict:
    """Score unlabeled pairs from a 2-column TSV or a single pair."""
    config, _, components = load_scoring_stack(checkpoint_dir, paths_config)
    if language not in config.languages:
        raise ConfigError(f"language {language!r} not configured: {config.languages}")
    if (input_path is None) == (sentence_pair is None):
        raise ConfigError("provide either an input file or one sentence pair")
    if input_path is not None:
        pairs = load_parallel_tsv(Path(input_path))
    else:
        pairs = [sentence_pair]

    ratings = []
    probabilities = []
    latencies = []
    for s1, s2 in pairs:
        started = time.perf_counter()
        rating, probs = components.scorer.predict(s1, s2, language, use_ensemble)
        latencies.append((time.perf_counter() - started) * 1000.0)
        ratings.append(rating)
        probabilities.append(probs)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    levels = config.sts.levels
    header = ["sentence1", "sentence2", "rating"]
    if include_probs:
        header += [f"p{j}" for j in range(levels + 1)]
    rows = []
    for (s1, s2), rating, probs in zip(pairs, ratings, probabilities):
        row = [s1, s2, f"{rating:.6f}"]
        if include_probs:
            row += [f"{p:.6f}" for p in probs]
        rows.append(tuple(row))
    write_tsv(out_dir / "scores.tsv", header, rows)
    summary = {
        "config": config.to_dict(),
        "seed": config.seed,
        "language": language,
        "pairs": len(pairs),
        "latency_ms": {
            "mean": float(np.mean(latencies)),
            "min": float(np.min(latencies)),
            "max": float(np.max(latencies)),
        },
    }
    write_json(out_dir / "report.json", summary)
    return summary


def run_baseline(method: str, data_path: Path, out_dir: Path, levels: int,
                 metric: str = "pearson", language: str = "unspecified",
                 vectors_path: Path | None = None) -> dict:
    """Bag-of-words baselines over a labeled pair file."""
    if method not in ("onehot", "embed-avg"):
        raise ConfigError(f"unknown baseline method {method!r}")
    if metric not in ("pearson", "auc"):
        raise ConfigError(f"unknown metric {metric!r}")
    examples = load_sts_tsv(Path(data_path), language, levels, "test")
    if method == "embed-avg":
        if vectors_path is None:
            raise ConfigError("embed-avg baseline requires a vector file")
        vectors = load_vector_file(Path(vectors_path))
        sims = [embedding_average_cosine(ex.sentence1, ex.sentence2, vectors)
                for ex in examples]
    else:
        sims = [onehot_cosine(ex.sentence1, ex.sentence2) for ex in examples]
    golds = [ex.gold for ex in examples]
    if metric == "auc":
        value = auc(sims, [int(g) for g in golds])
    else:
        value = pearson(sims, golds)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_tsv(out_dir / "baseline.tsv",
              ["sentence1", "sentence2", "gold", "similarity"],
              [(ex.sentence1, ex.sentence2, ex.gold, f"{s:.6f}")
               for ex, s in zip(examples, sims)])
    render_scatter(out_dir / "baseline.png", golds, sims,
                   f"{method} baseline", "gold", "cosine similarity")
    summary = {
        "method": method,
        "data": str(data_path),
        "metric": metric,
        "value": value,
        "pairs": len(examples),
    }
    write_json(out_dir / "report.json", summary)
    return summary


def _ablation_cell_config(config: RunConfig, multilingual: bool) -> RunConfig:
    payload = config.to_dict()
    payload["sts"]["ensemble"]["enabled"] = multilingual
    if not multilingual:
        payload["sts"]["ensemble"]["beta"] = None
        payload["sts"]["ensemble"]["beta_mode"] = "learnable"
    return RunConfig.from_dict(payload)


def run_ablation(config: RunConfig, out_dir: Path) -> dict:
    """The 2x4 grid: {scratch, pretrained} x {data/ensemble settings}.

    The first configured language plays the rich-resource role, the
    second the low-resource role; every cell is evaluated on the
    low-resource test file.
    """
    if len(config.languages) != 2:
        raise ConfigError("the ablation grid expects exactly two languages")
    rich, low = config.languages
    for lang in (rich, low):
        if lang not in config.paths.sts_data or "train" not in config.paths.sts_data[lang]:
            raise DataError(f"ablation requires sts training data for {lang!r}")
    low_entry = config.paths.sts_data[low]
    if "test" not in low_entry:
        raise DataError(f"ablation requires a test file for the low-resource language {low!r}")

    bundle = load_bundle(config)
    if not config.paths.parallel_corpus:
        raise ConfigError("paths.parallel_corpus is not configured")
    pairs = load_parallel_tsv(Path(config.paths.parallel_corpus))
    outcome = pretrain_mt(config, bundle, pairs)
    mt_checkpoint = Checkpoint(
        stage=STAGE_MT, config=config.to_dict(), fingerprints=bundle.fingerprints(),
        arrays={name: p.data.copy() for name, p in outcome.model.parameters()})

    per_language: dict[str, tuple[list[StsExample], list[StsExample]]] = {}
    for lang in (rich, low):
        entry = config.paths.sts_data[lang]
        train = load_sts_tsv(Path(entry["train"]), lang, config.sts.levels)
        if "dev" in entry:
            dev = load_sts_tsv(Path(entry["dev"]), lang, config.sts.levels, "dev")
        else:
            train, dev = carve_dev_split(
                train, config.sts.dev_fraction, derive_seed(config.seed, STREAM_CARVE))
        per_language[lang] = (train, dev)
    test_examples = load_sts_tsv(Path(low_entry["test"]), low, config.sts.levels, "test")

    row_languages = {
        "rich-only": [rich],
        "low-only": [low],
        "rich+low": [rich, low],
        "rich+low+multilingual": [rich, low],
    }
    cells = []
    for column in ABLATION_COLUMNS:
        pretrained = column == "pretrained"
        for row in ABLATION_ROWS:
            multilingual = row == "rich+low+multilingual"
            cell_config = _ablation_cell_config(config, multilingual)
            components = prepare_sts_components(
                cell_config, bundle, mt_checkpoint if pretrained else None)
            train_examples = []
            dev_examples = []
            for lang in row_languages[row]:
                train_examples.extend(per_language[lang][0])
                dev_examples.extend(per_language[lang][1])
            result = train_sts_loop(cell_config, components, train_examples, dev_examples)
            ratings, probabilities = evaluate_sts(components.scorer, test_examples)
            golds = [ex.gold for ex in test_examples]
            test_value = _metric_value(cell_config, golds, ratings, probabilities)
            cells.append({
                "row": row,
                "column": column,
                "pretrained": pretrained,
                "multilingual": multilingual,
                "train_languages": row_languages[row],
                "dev_metric": result.best_metric,
                "test_metric": test_value,
                "best_step": result.best_step,
                "config": cell_config.to_dict(),
                "seed": cell_config.seed,
            })

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_tsv(out_dir / "ablation.tsv",
              ["row", "column", "dev_metric", "test_metric"],
              [(c["row"], c["column"], f"{c['dev_metric']:.6f}",
                f"{c['test_metric']:.6f}") for c in cells])
    series = {
        column: [next(c["test_metric"] for c in cells
                      if c["row"] == row and c["column"] == column)
                 for row in ABLATION_ROWS]
        for column in ABLATION_COLUMNS
    }
    render_grouped_bars(out_dir / "ablation.png", list(ABLATION_ROWS), series,
                        f"ablation grid (test {config.sts.metric}, language {low!r})",
                        config.sts.metric)
    summary = {
        "config": config.to_dict(),
        "seed": config.seed,
        "rich_language": rich,
        "low_language": low,
        "cells": cells,
    }
    write_json(out_dir / "report.json", summary)
    return summary
