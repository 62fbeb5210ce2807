"""Quaternion knowledge-graph embeddings (QuatE and QuatDE variants)."""

from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    Dataset,
    FilterIndex,
    build_filter_index,
    load_dataset,
    make_dataset,
    relation_stats,
    save_dataset,
)
from .errors import (
    CheckpointFormatError,
    CountMismatchError,
    DataFormatError,
    EmptySplitError,
    IndexOutOfRangeError,
    LengthMismatchError,
    MalformedLineError,
    QkgeError,
    ZeroNormError,
)
from .estimator import QuaternionKGE
from .evaluation import (
    Metrics,
    RankingReport,
    classify,
    evaluate,
    learn_thresholds,
    rank_triple,
)
from .model import (
    CandidateScorer,
    ModelParams,
    initialize_params,
    score,
    score_batch,
)
from .quaternion import Quaternion, QuaternionVector
from .training import BernoulliStats, TrainConfig, TrainResult, train

__version__ = "0.1.0"

__all__ = [
    "BernoulliStats",
    "CandidateScorer",
    "CheckpointFormatError",
    "CountMismatchError",
    "DataFormatError",
    "Dataset",
    "EmptySplitError",
    "FilterIndex",
    "IndexOutOfRangeError",
    "LengthMismatchError",
    "MalformedLineError",
    "Metrics",
    "ModelParams",
    "QkgeError",
    "Quaternion",
    "QuaternionKGE",
    "QuaternionVector",
    "RankingReport",
    "TrainConfig",
    "TrainResult",
    "ZeroNormError",
    "build_filter_index",
    "classify",
    "evaluate",
    "initialize_params",
    "learn_thresholds",
    "load_checkpoint",
    "load_dataset",
    "make_dataset",
    "rank_triple",
    "relation_stats",
    "save_checkpoint",
    "save_dataset",
    "score",
    "score_batch",
    "train",
]
