"""Synthetic two-language corpora for desk-scale runs and tests.

The toy languages share an alphabet but not words: every word of the
first language maps to a unique word of the second (reversal plus a
suffix), and parallel sentences are word-by-word translations. Similarity
data controls lexical overlap, so gold ratings are learnable from
alignment.

Run ``python -m multists.toy OUT_DIR`` to write a ready-to-use data set.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .data import StsExample

WORDS = [
    "mira", "tolo", "bek", "sani", "vor", "luma", "pek", "dor",
    "wili", "zan", "kofu", "rel", "timo", "gasu", "nol", "heba",
]


def translate_word(word: str) -> str:
    return word[::-1] + "a"


def translate_sentence(sentence: str) -> str:
    return " ".join(translate_word(w) for w in sentence.split())


def _word_weights() -> np.ndarray:
    ranks = np.arange(1, len(WORDS) + 1, dtype=np.float64)
    weights = 1.0 / ranks
    return weights / weights.sum()


def make_parallel_corpus(count: int, seed: int, min_len: int = 4,
                         max_len: int = 8) -> list[tuple[str, str]]:
    """Word-by-word parallel pairs (first language, second language)."""
    rng = np.random.default_rng(seed)
    weights = _word_weights()
    pairs = []
    for _ in range(count):
        length = int(rng.integers(min_len, max_len + 1))
        words = [WORDS[i] for i in rng.choice(len(WORDS), size=length, p=weights)]
        source = " ".join(words)
        pairs.append((source, translate_sentence(source)))
    return pairs


def make_sts_examples(count: int, seed: int, language: str,
                      second_language: bool = False, levels: int = 5,
                      split: str = "train") -> list[StsExample]:
    """Rated pairs whose gold equals ``levels`` times the kept-word fraction.

    ``second_language`` renders the pair in the mapped toy language while
    keeping the same gold, so the two languages' data sets are parallel.
    """
    rng = np.random.default_rng(seed)
    weights = _word_weights()
    examples = []
    for _ in range(count):
        length = int(rng.integers(5, 9))
        first = [WORDS[i] for i in rng.choice(len(WORDS), size=length, p=weights)]
        keep = int(rng.integers(0, length + 1))
        replace_positions = rng.choice(length, size=length - keep, replace=False)
        second = list(first)
        for position in replace_positions:
            alternatives = [w for w in WORDS if w != first[position]]
            second[position] = alternatives[int(rng.integers(len(alternatives)))]
        gold = levels * keep / length
        s1 = " ".join(first)
        s2 = " ".join(second)
        if second_language:
            s1 = translate_sentence(s1)
            s2 = translate_sentence(s2)
        examples.append(StsExample(s1, s2, gold, language, split))
    return examples


def make_binary_examples(count: int, seed: int, language: str,
                         second_language: bool = False,
                         split: str = "train") -> list[StsExample]:
    """Binary-label pairs: similar (1) keeps most words, dissimilar (0) few."""
    rated = make_sts_examples(count, seed, language, second_language,
                              levels=5, split=split)
    out = []
    for ex in rated:
        label = 1.0 if ex.gold >= 2.5 else 0.0
        out.append(StsExample(ex.sentence1, ex.sentence2, label, language, split))
    return out


def write_sts_tsv(path: Path, examples: list[StsExample]):
    lines = [f"{ex.sentence1}\t{ex.sentence2}\t{ex.gold}" for ex in examples]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_parallel_tsv(path: Path, pairs: list[tuple[str, str]]):
    lines = [f"{a}\t{b}" for a, b in pairs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 1:
        print("usage: python -m multists.toy OUT_DIR", file=sys.stderr)
        return 2
    out = Path(args[0])
    out.mkdir(parents=True, exist_ok=True)
    write_parallel_tsv(out / "parallel.tsv", make_parallel_corpus(50, seed=11))
    write_sts_tsv(out / "sts.l1.train.tsv", make_sts_examples(40, seed=21, language="l1"))
    write_sts_tsv(out / "sts.l1.test.tsv",
                  make_sts_examples(20, seed=22, language="l1", split="test"))
    write_sts_tsv(out / "sts.l2.train.tsv",
                  make_sts_examples(40, seed=23, language="l2", second_language=True))
    write_sts_tsv(out / "sts.l2.test.tsv",
                  make_sts_examples(20, seed=24, language="l2", second_language=True,
                                    split="test"))
    print(f"wrote toy corpus under {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
