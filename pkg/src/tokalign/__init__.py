"""Reference-free morphological plausibility scoring for subword tokenizers.

The pipeline joins a morphological lexicon with gold segmentations,
trains subword tokenizers, aligns subwords with morpho-syntactic
features through a lexical translation table, and aggregates the
alignment probabilities into a per-tokenizer score.  Boundary precision
and recall against the gold segmentation, plus rank correlation between
the two metric families, close the loop.
"""

from .corpus import (
    CuratedDataset,
    FeatureMode,
    WordEntry,
    curate,
    feature_tokens,
    parse_feature_lexicon,
    parse_segmentation_lexicon,
    read_curated,
    write_curated,
)
from .errors import (
    ConfigError,
    DataError,
    NumericalError,
    TokalignError,
    UncoverableWord,
)
from .ibm1 import (
    ParallelPair,
    TranslationTable,
    build_parallel_corpus,
    em_epoch,
    train_ibm1,
    uniform_init,
)
from .metrics import (
    Aggregation,
    ScoreConfig,
    ScoreRow,
    alignment_score,
    boundary_prf,
    subword_score,
)
from .stats import CorrelationReport, build_report, spearman
from .tokenizers import (
    TokenizerKind,
    TokenizerModel,
    TrainConfig,
    canonical_subwords,
    load_model,
    save_model,
    segment,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Aggregation",
    "ConfigError",
    "CorrelationReport",
    "CuratedDataset",
    "DataError",
    "FeatureMode",
    "NumericalError",
    "ParallelPair",
    "ScoreConfig",
    "ScoreRow",
    "TokalignError",
    "TokenizerKind",
    "TokenizerModel",
    "TrainConfig",
    "TranslationTable",
    "UncoverableWord",
    "WordEntry",
    "alignment_score",
    "boundary_prf",
    "build_parallel_corpus",
    "build_report",
    "canonical_subwords",
    "curate",
    "em_epoch",
    "feature_tokens",
    "load_model",
    "parse_feature_lexicon",
    "parse_segmentation_lexicon",
    "read_curated",
    "save_model",
    "segment",
    "spearman",
    "subword_score",
    "train",
    "train_ibm1",
    "uniform_init",
    "write_curated",
]
