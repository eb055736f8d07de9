"""Cross-lingual semantic textual similarity.

A shared multilingual transformer encoder is pretrained with four-way
translation (including denoised self-translation), then a similarity head
with intra-/inter-sentence attention and orthogonal decomposition is
trained under a KL rating objective; predictions from several language
semantic spaces can be ensembled.
"""

from .autodiff import Tensor, no_grad, concat, topological_order
from .bpe import (SubwordModel, TokenizedSentence, TokenizerBundle, Vocabulary,
                  learn_bpe, encode_for_direction)
from .config import RunConfig
from .ensemble import EnsembleWeights, combine_distributions, multilingual_encode
from .errors import (ConfigError, DataError, MetricError, MultistsError,
                     ShapeError, TrainingError)
from .metrics import auc, bleu4, pearson
from .noise import NoiseConfig, corrupt
from .optim import Adam
from .scoring import SimilarityScorer
from .sts import (StsConfig, StsHead, kl_divergence, orthogonal_decompose,
                  predicted_rating, soft_align, sparse_target)
from .transformer import (MtLossWeights, TransformerConfig, TranslationExample,
                          TranslationModel, direction_name, directions_for)

__version__ = "0.1.0"

__all__ = [
    "Adam", "ConfigError", "DataError", "EnsembleWeights", "MetricError",
    "MtLossWeights", "MultistsError", "NoiseConfig", "RunConfig", "ShapeError",
    "SimilarityScorer", "StsConfig", "StsHead", "SubwordModel", "Tensor",
    "TokenizedSentence", "TokenizerBundle", "TrainingError", "TransformerConfig",
    "TranslationExample", "TranslationModel", "Vocabulary", "auc", "bleu4",
    "combine_distributions", "concat", "corrupt", "direction_name",
    "directions_for", "encode_for_direction", "kl_divergence", "learn_bpe",
    "multilingual_encode", "no_grad", "orthogonal_decompose", "pearson",
    "predicted_rating", "soft_align", "sparse_target", "topological_order",
]
