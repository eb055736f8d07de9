"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric or
training error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import RunConfig
from .errors import ConfigError, DataError, ShapeError, TrainingError
from . import pipeline

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multists",
        description="Cross-lingual semantic textual similarity with a "
                    "translation-pretrained shared encoder.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", type=Path, required=config_required,
                       help="run configuration (JSON)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured random seed")
        p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("bpe-train", help="learn subword models and vocabularies")
    common(p)

    p = sub.add_parser("pretrain", help="stage 1: shared-encoder translation training")
    common(p)

    p = sub.add_parser("sts-train", help="stage 2: similarity training")
    common(p)
    p.add_argument("--checkpoint", type=Path, default=None,
                   help="stage-1 checkpoint directory (omit to train from scratch)")

    p = sub.add_parser("eval", help="score a labeled file and report the metric")
    common(p, config_required=False)
    p.add_argument("--checkpoint", type=Path, required=True,
                   help="stage-2 checkpoint directory")
    p.add_argument("--input", type=Path, required=True,
                   help="labeled TSV: sentence1<TAB>sentence2<TAB>gold")
    p.add_argument("--lang", required=True, help="language of the input pairs")
    p.add_argument("--ensemble", choices=("on", "off"), default=None,
                   help="force the multilingual ensemble on or off")

    p = sub.add_parser("score", help="score unlabeled pairs")
    common(p, config_required=False)
    p.add_argument("--checkpoint", type=Path, required=True,
                   help="stage-2 checkpoint directory")
    p.add_argument("--input", type=Path, default=None,
                   help="unlabeled TSV: sentence1<TAB>sentence2")
    p.add_argument("--sentence1", default=None, help="first sentence of a single pair")
    p.add_argument("--sentence2", default=None, help="second sentence of a single pair")
    p.add_argument("--lang", required=True, help="language of the input pairs")
    p.add_argument("--ensemble", choices=("on", "off"), default=None,
                   help="force the multilingual ensemble on or off")
    p.add_argument("--probs", action="store_true",
                   help="include the rating distribution in the output")

    p = sub.add_parser("baseline", help="bag-of-words baselines")
    p.add_argument("--method", choices=("onehot", "embed-avg"), required=True)
    p.add_argument("--input", type=Path, required=True,
                   help="labeled TSV: sentence1<TAB>sentence2<TAB>gold")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--vectors", type=Path, default=None,
                   help="word-vector file for embed-avg")
    p.add_argument("--levels", type=int, default=5, help="rating scale upper bound")
    p.add_argument("--metric", choices=("pearson", "auc"), default="pearson")
    p.add_argument("--lang", default="unspecified", help="language tag for reports")

    p = sub.add_parser("ablation", help="run the 8-cell ablation grid")
    common(p)
    return parser


def _load_config(args) -> RunConfig:
    config = RunConfig.load(args.config)
    if args.seed is not None:
        payload = config.to_dict()
        payload["seed"] = args.seed
        config = RunConfig.from_dict(payload)
    return config


def _optional_config(args) -> RunConfig | None:
    if getattr(args, "config", None) is None:
        return None
    return _load_config(args)


def _ensemble_flag(args) -> bool | None:
    if args.ensemble is None:
        return None
    return args.ensemble == "on"


def _dispatch(args) -> dict:
    if args.command == "bpe-train":
        return pipeline.run_bpe_train(_load_config(args), args.out)
    if args.command == "pretrain":
        return pipeline.run_pretrain(_load_config(args), args.out)
    if args.command == "sts-train":
        return pipeline.run_sts_train(_load_config(args), args.out, args.checkpoint)
    if args.command == "eval":
        return pipeline.run_eval(args.checkpoint, args.input, args.lang, args.out,
                                 use_ensemble=_ensemble_flag(args),
                                 paths_config=_optional_config(args))
    if args.command == "score":
        pair = None
        if args.sentence1 is not None or args.sentence2 is not None:
            if args.sentence1 is None or args.sentence2 is None:
                raise ConfigError("provide both --sentence1 and --sentence2")
            pair = (args.sentence1, args.sentence2)
        return pipeline.run_score(args.checkpoint, args.out, args.lang,
                                  input_path=args.input, sentence_pair=pair,
                                  use_ensemble=_ensemble_flag(args),
                                  include_probs=args.probs,
                                  paths_config=_optional_config(args))
    if args.command == "baseline":
        return pipeline.run_baseline(args.method, args.input, args.out, args.levels,
                                     metric=args.metric, language=args.lang,
                                     vectors_path=args.vectors)
    if args.command == "ablation":
        return pipeline.run_ablation(_load_config(args), args.out)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _dispatch(args)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return 2
    except DataError as exc:
        logger.error("data error: %s", exc)
        return 3
    except (TrainingError, ShapeError) as exc:
        logger.error("numeric error: %s", exc)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
