"""Training-data records and TSV ingestion.

All corpus files are UTF-8 TSV. Rows with the wrong column count (which is
what a stray tab or newline inside a sentence produces) are rejected with
their line number.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass
class StsExample:
    """One labeled sentence pair."""

    sentence1: str
    sentence2: str
    gold: float
    language: str
    split: str = "train"

    def __post_init__(self):
        if not self.sentence1.strip() or not self.sentence2.strip():
            raise DataError("sentences must be nonempty")


def _read_rows(path: Path, columns: int, what: str) -> list[tuple[int, list[str]]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataError(f"{what} file not found: {path}") from exc
    rows = []
    for number, line in enumerate(text.splitlines(), start=1):
        parts = line.split("\t")
        if len(parts) != columns:
            raise DataError(
                f"{what} {path}, line {number}: expected {columns} tab-separated "
                f"columns, got {len(parts)}")
        rows.append((number, parts))
    if not rows:
        raise DataError(f"{what} file is empty: {path}")
    return rows


def load_parallel_tsv(path: Path) -> list[tuple[str, str]]:
    """Parallel corpus: source<TAB>target, one pair per line."""
    pairs = []
    for number, (left, right) in _read_rows(path, 2, "parallel corpus"):
        if not left.strip() or not right.strip():
            raise DataError(f"parallel corpus {path}, line {number}: empty sentence")
        pairs.append((left, right))
    return pairs


def load_sts_tsv(path: Path, language: str, levels: int,
                 split: str = "train") -> list[StsExample]:
    """Labeled pairs: sentence1<TAB>sentence2<TAB>gold; header optional."""
    rows = _read_rows(path, 3, "similarity data")
    examples = []
    for index, (number, (s1, s2, gold_text)) in enumerate(rows):
        try:
            gold = float(gold_text)
        except ValueError:
            if index == 0:
                continue  # optional header line
            raise DataError(
                f"similarity data {path}, line {number}: "
                f"gold value {gold_text!r} is not a number") from None
        if not 0.0 <= gold <= levels:
            raise DataError(
                f"similarity data {path}, line {number}: gold {gold} outside [0, {levels}]")
        if not s1.strip() or not s2.strip():
            raise DataError(f"similarity data {path}, line {number}: empty sentence")
        examples.append(StsExample(s1, s2, gold, language, split))
    if not examples:
        raise DataError(f"similarity data {path} contains no examples")
    return examples


def carve_dev_split(examples: list[StsExample], fraction: float,
                    seed: int) -> tuple[list[StsExample], list[StsExample]]:
    """Seeded random dev carve-out used when no explicit dev file exists."""
    if not 0.0 < fraction < 1.0:
        raise DataError(f"dev fraction {fraction} must lie in (0, 1)")
    if len(examples) < 2:
        raise DataError("need at least two examples to carve a dev split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(examples))
    dev_count = max(1, int(round(fraction * len(examples))))
    dev_index = set(order[:dev_count].tolist())
    train, dev = [], []
    for i, ex in enumerate(examples):
        bucket = dev if i in dev_index else train
        bucket.append(StsExample(ex.sentence1, ex.sentence2, ex.gold, ex.language,
                                 "dev" if i in dev_index else "train"))
    if not train:
        raise DataError("dev carve-out consumed every training example")
    return train, dev


def split_holdout(pairs: list, fraction: float, seed: int) -> tuple[list, list]:
    """Seeded split of a parallel corpus into (train, holdout)."""
    if fraction <= 0.0:
        return list(pairs), []
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pairs))
    held = max(1, int(round(fraction * len(pairs))))
    held_index = set(order[:held].tolist())
    train = [p for i, p in enumerate(pairs) if i not in held_index]
    holdout = [p for i, p in enumerate(pairs) if i in held_index]
    if not train:
        raise DataError("holdout fraction leaves no training pairs")
    return train, holdout
