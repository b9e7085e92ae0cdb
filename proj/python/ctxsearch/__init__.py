"""Leakage-reduced context/target pair generation and contextual code retrieval."""

from ._core import (
    Error,
    Pair,
    ToyEncoder,
    average_precision,
    batch_by_language,
    encoder_tokens,
    evaluate,
    generate_pairs,
    info_nce,
    ndcg,
    parse_tokens,
    precision_at_k,
    reciprocal_rank,
    reconstruct,
    run_cli,
    select_span,
    version,
)

__all__ = [
    "Error",
    "Pair",
    "ToyEncoder",
    "average_precision",
    "batch_by_language",
    "encoder_tokens",
    "evaluate",
    "generate_pairs",
    "info_nce",
    "ndcg",
    "parse_tokens",
    "precision_at_k",
    "reciprocal_rank",
    "reconstruct",
    "run_cli",
    "select_span",
    "version",
]
