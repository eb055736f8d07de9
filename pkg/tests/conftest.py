"""Shared fixtures: toy corpora, tokenizer artifacts, small trained models.

Expensive artifacts are session-scoped; pytest builds them only when a
test actually asks for them.
"""

from __future__ import annotations

import numpy as np
import pytest

from multists.bpe import TokenizerBundle
from multists.checkpoint import Checkpoint, STAGE_MT
from multists.config import RunConfig
from multists.toy import make_parallel_corpus, make_sts_examples
from multists.training import pretrain_mt


def desk_config(**overrides) -> RunConfig:
    payload = {
        "languages": ["l1", "l2"],
        "seed": 7,
    }
    payload.update(overrides)
    return RunConfig.from_dict(payload)


def small_sts_overrides(steps: int = 300, eval_every: int = 100) -> dict:
    return {"steps": steps, "eval_every": eval_every, "hidden_units": 64,
            "patience": 50}


@pytest.fixture(scope="session")
def toy_pairs():
    return make_parallel_corpus(50, seed=11)


@pytest.fixture(scope="session")
def toy_bundle(toy_pairs):
    cfg = desk_config()
    sentences = {
        "l1": [a for a, _ in toy_pairs],
        "l2": [b for _, b in toy_pairs],
    }
    return TokenizerBundle.train(
        sentences, cfg.tokenizer.encoder_merges, cfg.tokenizer.decoder_merges,
        cfg.tokenizer.encoder_vocab_size, cfg.tokenizer.decoder_vocab_size)


@pytest.fixture(scope="session")
def mini_trained(toy_pairs, toy_bundle):
    """A quickly trained small model for tests that need non-random weights."""
    cfg = desk_config(
        transformer={"d_model": 32, "d_ff": 64, "heads": 2,
                     "encoder_layers": 2, "decoder_layers": 1},
        mt={"steps": 400, "log_every": 1000, "batch_tokens": 256,
            "holdout_fraction": 0.1},
    )
    outcome = pretrain_mt(cfg, toy_bundle, toy_pairs[:12])
    return cfg, outcome


@pytest.fixture(scope="session")
def desk_pretrained(toy_pairs, toy_bundle):
    """Full desk-config pretraining run (the stage-1 artifact)."""
    cfg = desk_config()
    outcome = pretrain_mt(cfg, toy_bundle, toy_pairs)
    checkpoint = Checkpoint(
        stage=STAGE_MT, config=cfg.to_dict(), fingerprints=toy_bundle.fingerprints(),
        arrays={name: p.data.copy() for name, p in outcome.model.parameters()})
    return cfg, outcome, checkpoint


@pytest.fixture(scope="session")
def sts_train_examples():
    return make_sts_examples(40, seed=21, language="l1")


@pytest.fixture(scope="session")
def sts_dev_examples():
    return make_sts_examples(10, seed=25, language="l1", split="dev")


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
