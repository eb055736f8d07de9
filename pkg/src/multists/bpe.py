"""Byte-pair-encoding subword models and vocabularies.

One encoder-side model/vocabulary is learned on the mixed text of all
languages; decoder-side models are learned per language. Words carry a
word-final marker on their last subword so that segmentations concatenate
back to the original word.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DataError

WORD_END = "</w>"

PAD_TOKEN = "<pad>"
BOS_TOKEN = "<s>"
EOS_TOKEN = "</s>"
UNK_TOKEN = "<unk>"


def language_token(language: str) -> str:
    return f"<2{language}>"


def normalize(text: str) -> list[str]:
    """Lowercase and whitespace-tokenize; the only preprocessing applied."""
    return text.lower().split()


def _word_symbols(word: str) -> tuple[str, ...]:
    return tuple(word[:-1]) + (word[-1] + WORD_END,)


def _merge_pair(symbols: tuple[str, ...], pair: tuple[str, str]) -> tuple[str, ...]:
    """Replace non-overlapping occurrences of ``pair`` left to right."""
    left, right = pair
    out = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and symbols[i] == left and symbols[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def learn_bpe(word_freqs: dict[str, int], num_merges: int) -> "SubwordModel":
    """Greedy merge learning over a word-frequency table.

    Each iteration merges the most frequent adjacent symbol pair;
    frequency ties break toward the lexicographically smaller pair.
    Stops early when no adjacent pairs remain.
    """
    if not word_freqs:
        raise DataError("cannot learn BPE from an empty corpus")
    if num_merges < 0:
        raise ConfigError("num_merges must be >= 0")
    words = {w: _word_symbols(w) for w in word_freqs}
    merges: list[tuple[str, str]] = []
    for _ in range(num_merges):
        counts: Counter[tuple[str, str]] = Counter()
        for w, symbols in words.items():
            freq = word_freqs[w]
            for a, b in zip(symbols, symbols[1:]):
                counts[(a, b)] += freq
        if not counts:
            break
        best = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        merges.append(best)
        words = {w: _merge_pair(s, best) for w, s in words.items()}
    return SubwordModel(merges)


@dataclass
class SubwordModel:
    """Ordered BPE merge list; earlier entries have higher priority."""

    merges: list[tuple[str, str]]
    _priority: dict[tuple[str, str], int] = field(init=False, repr=False)
    _cache: dict[str, tuple[str, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        if len(set(self.merges)) != len(self.merges):
            raise DataError("subword model contains duplicate merge pairs")
        self._priority = {pair: i for i, pair in enumerate(self.merges)}
        self._cache = {}

    def segment_word(self, word: str) -> list[str]:
        """Split one word into marked subwords.

        Applies the highest-priority applicable merge first, at its
        leftmost occurrence, until no merge applies.
        """
        if not word:
            raise DataError("cannot segment an empty word")
        cached = self._cache.get(word)
        if cached is None:
            symbols = list(_word_symbols(word))
            while len(symbols) > 1:
                ranked = [
                    (self._priority[pair], i)
                    for i, pair in enumerate(zip(symbols, symbols[1:]))
                    if pair in self._priority
                ]
                if not ranked:
                    break
                _, i = min(ranked)
                symbols[i:i + 2] = [symbols[i] + symbols[i + 1]]
            cached = tuple(symbols)
            self._cache[word] = cached
        return list(cached)

    def segment(self, words: list[str]) -> list[str]:
        out: list[str] = []
        for w in words:
            out.extend(self.segment_word(w))
        return out

    def to_text(self) -> str:
        lines = ["#version:1"]
        lines.extend(f"{a} {b}" for a, b in self.merges)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SubwordModel":
        lines = text.splitlines()
        if not lines or lines[0] != "#version:1":
            raise DataError("subword model file missing '#version:1' header")
        merges = []
        for n, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise DataError(f"malformed merge on line {n}: {line!r}")
            merges.append((parts[0], parts[1]))
        return cls(merges)

    def save(self, path: Path):
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "SubwordModel":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def detokenize(subwords: list[str]) -> str:
    """Invert segmentation: markers close words, words join with spaces."""
    return "".join(subwords).replace(WORD_END, " ").strip()


def strip_markers(subwords: list[str]) -> list[str]:
    return [s.removesuffix(WORD_END) for s in subwords]


class Vocabulary:
    """Dense token-to-id map with reserved ids in the lowest positions.

    Reserved layout: PAD, BOS, EOS, UNK, then one language token per
    supported language, then content subwords ranked by frequency.
    """

    def __init__(self, tokens: list[str], languages: list[str], max_size: int):
        self.languages = list(languages)
        self.max_size = max_size
        self.id_to_token = list(tokens)
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise DataError("vocabulary contains duplicate tokens")
        if len(self.id_to_token) > max_size:
            raise ConfigError(f"vocabulary exceeds max_size={max_size}")
        expected_reserved = self.reserved_tokens(languages)
        if self.id_to_token[: len(expected_reserved)] != expected_reserved:
            raise DataError("vocabulary reserved tokens are missing or misordered")

    @staticmethod
    def reserved_tokens(languages: list[str]) -> list[str]:
        return [PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN] + [
            language_token(lang) for lang in languages
        ]

    @classmethod
    def build(cls, subword_freqs: dict[str, int], max_size: int,
              languages: list[str]) -> "Vocabulary":
        """Keep the most frequent subwords under the size cap.

        Frequency ties break toward the lexicographically smaller token.
        """
        reserved = cls.reserved_tokens(languages)
        if max_size <= len(reserved):
            raise ConfigError(
                f"max_size={max_size} leaves no room beyond {len(reserved)} reserved tokens")
        budget = max_size - len(reserved)
        reserved_set = set(reserved)
        candidates = [t for t in subword_freqs if t not in reserved_set]
        candidates.sort(key=lambda t: (-subword_freqs[t], t))
        return cls(reserved + candidates[:budget], languages, max_size)

    def __len__(self) -> int:
        return len(self.id_to_token)

    @property
    def pad_id(self) -> int:
        return self.token_to_id[PAD_TOKEN]

    @property
    def bos_id(self) -> int:
        return self.token_to_id[BOS_TOKEN]

    @property
    def eos_id(self) -> int:
        return self.token_to_id[EOS_TOKEN]

    @property
    def unk_id(self) -> int:
        return self.token_to_id[UNK_TOKEN]

    def language_id(self, language: str) -> int:
        token = language_token(language)
        if token not in self.token_to_id:
            raise ConfigError(f"unknown language {language!r} for this vocabulary")
        return self.token_to_id[token]

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, self.unk_id)

    def tokens_to_ids(self, tokens: list[str]) -> list[int]:
        return [self.lookup(t) for t in tokens]

    def ids_to_tokens(self, ids) -> list[str]:
        return [self.id_to_token[i] for i in ids]

    def to_text(self) -> str:
        return "".join(f"{t}\t{i}\n" for i, t in enumerate(self.id_to_token))

    @classmethod
    def from_text(cls, text: str, languages: list[str], max_size: int) -> "Vocabulary":
        tokens = []
        for n, line in enumerate(text.splitlines(), start=1):
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"malformed vocabulary entry on line {n}: {line!r}")
            token, id_str = parts
            if int(id_str) != len(tokens):
                raise DataError(f"non-dense vocabulary id on line {n}: {line!r}")
            tokens.append(token)
        return cls(tokens, languages, max_size)

    def save(self, path: Path):
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: Path, languages: list[str], max_size: int) -> "Vocabulary":
        return cls.from_text(Path(path).read_text(encoding="utf-8"), languages, max_size)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()


@dataclass
class TokenizedSentence:
    """Encoder-side token ids: [<2target>] ++ subword ids ++ [EOS]."""

    language: str
    target_language: str
    ids: list[int]


def encode_for_direction(sentence: str, model: SubwordModel, vocab: Vocabulary,
                         language: str, target_language: str) -> TokenizedSentence:
    """Encoder-side encoding with the target-language token prepended."""
    lang_id = vocab.language_id(target_language)
    subwords = model.segment(normalize(sentence))
    ids = [lang_id] + vocab.tokens_to_ids(subwords) + [vocab.eos_id]
    return TokenizedSentence(language=language, target_language=target_language, ids=ids)


def encode_target(sentence: str, model: SubwordModel, vocab: Vocabulary) -> list[int]:
    """Decoder-side encoding: subword ids plus EOS, no language token."""
    subwords = model.segment(normalize(sentence))
    return vocab.tokens_to_ids(subwords) + [vocab.eos_id]


def segment_corpus(model: SubwordModel, word_freqs: dict[str, int]) -> dict[str, int]:
    """Subword frequencies induced by segmenting a word-frequency table."""
    freqs: Counter[str] = Counter()
    for word, count in word_freqs.items():
        for sub in model.segment_word(word):
            freqs[sub] += count
    return dict(freqs)


def count_words(sentences: list[str]) -> dict[str, int]:
    freqs: Counter[str] = Counter()
    for sentence in sentences:
        freqs.update(normalize(sentence))
    return dict(freqs)


class TokenizerBundle:
    """The system's tokenizer artifacts: one shared encoder side, one
    decoder side per language."""

    def __init__(self, languages: list[str], encoder_model: SubwordModel,
                 encoder_vocab: Vocabulary,
                 decoder_models: dict[str, SubwordModel],
                 decoder_vocabs: dict[str, Vocabulary]):
        if set(decoder_models) != set(languages) or set(decoder_vocabs) != set(languages):
            raise ConfigError("decoder-side artifacts must cover exactly the configured languages")
        self.languages = list(languages)
        self.encoder_model = encoder_model
        self.encoder_vocab = encoder_vocab
        self.decoder_models = decoder_models
        self.decoder_vocabs = decoder_vocabs

    @classmethod
    def train(cls, sentences_by_language: dict[str, list[str]],
              encoder_merges: int, decoder_merges: int,
              encoder_vocab_size: int, decoder_vocab_size: int) -> "TokenizerBundle":
        """Learn all subword models and vocabularies from raw sentences."""
        languages = list(sentences_by_language)
        mixed: Counter[str] = Counter()
        for sentences in sentences_by_language.values():
            mixed.update(count_words(sentences))
        if not mixed:
            raise DataError("no text available to train the tokenizer")
        encoder_model = learn_bpe(dict(mixed), encoder_merges)
        encoder_vocab = Vocabulary.build(
            segment_corpus(encoder_model, dict(mixed)), encoder_vocab_size, languages)
        decoder_models = {}
        decoder_vocabs = {}
        for lang, sentences in sentences_by_language.items():
            freqs = count_words(sentences)
            if not freqs:
                raise DataError(f"no text available for language {lang!r}")
            decoder_models[lang] = learn_bpe(freqs, decoder_merges)
            decoder_vocabs[lang] = Vocabulary.build(
                segment_corpus(decoder_models[lang], freqs), decoder_vocab_size, [lang])
        return cls(languages, encoder_model, encoder_vocab, decoder_models, decoder_vocabs)

    def save(self, directory: Path):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.encoder_model.save(directory / "encoder.bpe")
        self.encoder_vocab.save(directory / "encoder.vocab")
        for lang in self.languages:
            self.decoder_models[lang].save(directory / f"decoder.{lang}.bpe")
            self.decoder_vocabs[lang].save(directory / f"decoder.{lang}.vocab")

    @classmethod
    def load(cls, directory: Path, languages: list[str],
             encoder_vocab_size: int, decoder_vocab_size: int) -> "TokenizerBundle":
        directory = Path(directory)
        try:
            encoder_model = SubwordModel.load(directory / "encoder.bpe")
            encoder_vocab = Vocabulary.load(
                directory / "encoder.vocab", languages, encoder_vocab_size)
            decoder_models = {
                lang: SubwordModel.load(directory / f"decoder.{lang}.bpe")
                for lang in languages
            }
            decoder_vocabs = {
                lang: Vocabulary.load(
                    directory / f"decoder.{lang}.vocab", [lang], decoder_vocab_size)
                for lang in languages
            }
        except FileNotFoundError as exc:
            raise DataError(f"missing tokenizer artifact: {exc.filename}") from exc
        return cls(languages, encoder_model, encoder_vocab, decoder_models, decoder_vocabs)

    def fingerprints(self) -> dict[str, str]:
        out = {
            "encoder.bpe": hashlib.sha256(self.encoder_model.to_text().encode()).hexdigest(),
            "encoder.vocab": self.encoder_vocab.fingerprint(),
        }
        for lang in self.languages:
            out[f"decoder.{lang}.bpe"] = hashlib.sha256(
                self.decoder_models[lang].to_text().encode()).hexdigest()
            out[f"decoder.{lang}.vocab"] = self.decoder_vocabs[lang].fingerprint()
        return out
