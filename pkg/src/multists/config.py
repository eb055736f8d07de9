"""Run configuration: one JSON document validated into dataclasses.

Unknown keys are rejected so typos fail loudly instead of silently
falling back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .noise import NoiseConfig
from .transformer import MtLossWeights, TransformerConfig, directions_for

RATING_METRICS = ("pearson", "auc")


def _from_mapping(cls, mapping: dict, where: str):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where} must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = set(mapping) - known
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    try:
        return cls(**mapping)
    except TypeError as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


@dataclass
class TokenizerSettings:
    encoder_merges: int = 200
    decoder_merges: int = 120
    encoder_vocab_size: int = 512
    decoder_vocab_size: int = 256

    def __post_init__(self):
        if min(self.encoder_merges, self.decoder_merges) < 0:
            raise ConfigError("merge counts must be >= 0")
        if min(self.encoder_vocab_size, self.decoder_vocab_size) < 8:
            raise ConfigError("vocabulary caps are unreasonably small")


@dataclass
class MtSettings:
    loss_weights: dict[str, float] | None = None  # None -> uniform over directions
    drop_prob: float = 0.1
    swap_window: int = 3
    batch_tokens: int = 512
    learning_rate: float = 3e-4
    steps: int = 2000
    holdout_fraction: float = 0.1
    log_every: int = 50

    def __post_init__(self):
        if self.batch_tokens < 1 or self.steps < 1 or self.log_every < 1:
            raise ConfigError("batch_tokens, steps and log_every must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ConfigError("holdout_fraction must lie in [0, 1)")

    def noise(self) -> NoiseConfig:
        return NoiseConfig(drop_prob=self.drop_prob, swap_window=self.swap_window)

    def weights(self, languages: list[str]) -> MtLossWeights:
        if self.loss_weights is None:
            return MtLossWeights.uniform(directions_for(languages))
        return MtLossWeights(dict(self.loss_weights))


@dataclass
class EnsembleSettings:
    enabled: bool = False
    languages: list[str] | None = None  # None -> every configured language
    beta_mode: str = "learnable"
    beta: list[float] | None = None

    def __post_init__(self):
        if self.beta_mode not in ("fixed", "learnable"):
            raise ConfigError("beta_mode must be 'fixed' or 'learnable'")
        if self.beta is not None and self.beta_mode != "fixed":
            raise ConfigError("explicit beta values require beta_mode='fixed'")


@dataclass
class StsSettings:
    levels: int = 5
    hidden_units: int = 300
    attn_dim: int | None = None
    match_dim: int | None = None
    compare_dim: int | None = None
    aggregation: str = "self_attention"
    freeze_encoder: bool = True
    unfreeze_last_n: int = 0
    learning_rate: float = 3e-4
    batch_pairs: int = 16
    steps: int = 3000
    eval_every: int = 100
    patience: int = 10
    dev_fraction: float = 0.2
    metric: str = "pearson"
    ensemble: EnsembleSettings = field(default_factory=EnsembleSettings)

    def __post_init__(self):
        if isinstance(self.ensemble, dict):
            self.ensemble = _from_mapping(EnsembleSettings, self.ensemble, "sts.ensemble")
        if self.metric not in RATING_METRICS:
            raise ConfigError(f"metric must be one of {RATING_METRICS}")
        if self.levels < 1:
            raise ConfigError("levels must be >= 1")
        if self.batch_pairs < 1 or self.steps < 1 or self.eval_every < 1:
            raise ConfigError("batch_pairs, steps and eval_every must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.unfreeze_last_n < 0:
            raise ConfigError("unfreeze_last_n must be >= 0")
        if not 0.0 < self.dev_fraction < 1.0:
            raise ConfigError("dev_fraction must lie in (0, 1)")


@dataclass
class PathSettings:
    tokenizer_dir: str | None = None
    parallel_corpus: str | None = None
    sts_data: dict[str, dict[str, str]] = field(default_factory=dict)
    vectors: str | None = None

    def __post_init__(self):
        for lang, entry in self.sts_data.items():
            unknown = set(entry) - {"train", "dev", "test"}
            if unknown:
                raise ConfigError(
                    f"unknown keys in paths.sts_data[{lang!r}]: {sorted(unknown)}")


@dataclass
class RunConfig:
    languages: list[str]
    seed: int = 0
    tokenizer: TokenizerSettings = field(default_factory=TokenizerSettings)
    transformer: TransformerConfig = field(default_factory=TransformerConfig)
    mt: MtSettings = field(default_factory=MtSettings)
    sts: StsSettings = field(default_factory=StsSettings)
    paths: PathSettings = field(default_factory=PathSettings)

    def __post_init__(self):
        if not self.languages:
            raise ConfigError("at least one language is required")
        if len(set(self.languages)) != len(self.languages):
            raise ConfigError("languages must be unique")
        for section, cls, name in (
            (self.tokenizer, TokenizerSettings, "tokenizer"),
            (self.transformer, TransformerConfig, "transformer"),
            (self.mt, MtSettings, "mt"),
            (self.sts, StsSettings, "sts"),
            (self.paths, PathSettings, "paths"),
        ):
            if isinstance(section, dict):
                setattr(self, name, _from_mapping(cls, section, name))
        if self.sts.unfreeze_last_n > self.transformer.encoder_layers:
            raise ConfigError("unfreeze_last_n exceeds the number of encoder layers")
        if self.sts.ensemble.languages:
            missing = set(self.sts.ensemble.languages) - set(self.languages)
            if missing:
                raise ConfigError(f"ensemble languages not configured: {sorted(missing)}")

    @classmethod
    def from_dict(cls, mapping: dict) -> "RunConfig":
        return _from_mapping(cls, mapping, "config")

    @classmethod
    def load(cls, path: Path) -> "RunConfig":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(payload)

    def to_dict(self) -> dict:
        return asdict(self)

    def ensemble_languages(self) -> list[str]:
        if self.sts.ensemble.languages:
            return list(self.sts.ensemble.languages)
        return list(self.languages)

    def unfrozen_encoder_layers(self) -> int:
        """How many trailing encoder layers train during the STS stage."""
        if not self.sts.freeze_encoder:
            return self.transformer.encoder_layers
        return self.sts.unfreeze_last_n
