"""Context-aware query suggestion with a hierarchical recurrent encoder-decoder."""

from hredqs._core import (
    Checkpoint,
    TrainConfig,
    Vocabulary,
    levenshtein,
    normalize_query,
    rescore,
    session_log_likelihood,
    suggest,
    train,
)

__all__ = [
    "Checkpoint",
    "TrainConfig",
    "Vocabulary",
    "levenshtein",
    "normalize_query",
    "rescore",
    "session_log_likelihood",
    "suggest",
    "train",
]
