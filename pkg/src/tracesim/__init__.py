"""Time-decayed semantic edit distance over timestamped text traces."""

__version__ = "0.1.0"

from ._backend import BACKEND_NAME
from .corpus import RoleLabel, TraceItem, Vocabulary, tokenize
from .cooccur import CooccurrenceMatrix, build_cooccurrence, word_similarity
from .distance import (DistanceSpec, Metric, cosine_distance, edit_distance,
                       pairwise_matrix, sed_ed_normalized, sed_max_normalized,
                       semantic_edit_distance, time_sensitive)
from .knn import predict_account, predict_tweet

__all__ = [
    "BACKEND_NAME",
    "CooccurrenceMatrix",
    "DistanceSpec",
    "Metric",
    "RoleLabel",
    "TraceItem",
    "Vocabulary",
    "build_cooccurrence",
    "cosine_distance",
    "edit_distance",
    "pairwise_matrix",
    "predict_account",
    "predict_tweet",
    "sed_ed_normalized",
    "sed_max_normalized",
    "semantic_edit_distance",
    "time_sensitive",
    "tokenize",
    "word_similarity",
]
