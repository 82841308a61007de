"""Pseudo-label quality scoring, selection and evaluation for ASR distillation data."""

from ._core import (
    AlignmentCounts,
    DataError,
    ErrorRate,
    InvalidArgument,
    IoError,
    NormConfig,
    __version__,
    cer,
    char_tokens,
    edit_align,
    embedding_similarity,
    entropy_score,
    geomean_confidence,
    kd_loss,
    mcd_score,
    nll_score,
    normalize,
    roc_auc,
    run_cli,
    score_manifest,
    select,
    synthesize_benchmark,
    wer,
    word_probs_from_tokens,
    word_tokens,
)

__all__ = [
    "AlignmentCounts",
    "DataError",
    "ErrorRate",
    "InvalidArgument",
    "IoError",
    "NormConfig",
    "__version__",
    "cer",
    "char_tokens",
    "edit_align",
    "embedding_similarity",
    "entropy_score",
    "geomean_confidence",
    "kd_loss",
    "mcd_score",
    "nll_score",
    "normalize",
    "roc_auc",
    "run_cli",
    "score_manifest",
    "select",
    "synthesize_benchmark",
    "wer",
    "word_probs_from_tokens",
    "word_tokens",
]
