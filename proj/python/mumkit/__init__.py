"""Measure how far text can be modulated before evaluators stop detecting or understanding it."""

from ._core import (
    Lexicon,
    MumkitError,
    adjusted_r2,
    build,
    classify_fit,
    fit,
    fit_logistic,
    format_imum,
    imum,
    levenshtein,
    logistic,
    replay,
    report,
    run,
    sha256_hex,
    similarity,
    spearman,
    strategies,
    sweep,
    tokenize,
    tradeoff,
)

__all__ = [
    "Lexicon",
    "MumkitError",
    "adjusted_r2",
    "build",
    "classify_fit",
    "fit",
    "fit_logistic",
    "format_imum",
    "imum",
    "levenshtein",
    "logistic",
    "replay",
    "report",
    "run",
    "sha256_hex",
    "similarity",
    "spearman",
    "strategies",
    "sweep",
    "tokenize",
    "tradeoff",
]
