"""Average precision, precision-recall curves and error-type analysis."""

from udet.evaluation.errors import ErrorType, classify_error, error_breakdown, parse_similar
from udet.evaluation.metrics import (
    FALSE_POSITIVE,
    TRUE_POSITIVE,
    ClassResult,
    MatchResult,
    average_precision,
    average_precision_exact,
    evaluate,
    format_pr_curve,
    match_detections,
    mean_ap,
    pr_curve,
)

__all__ = [
    "FALSE_POSITIVE",
    "TRUE_POSITIVE",
    "ClassResult",
    "ErrorType",
    "MatchResult",
    "average_precision",
    "average_precision_exact",
    "classify_error",
    "error_breakdown",
    "evaluate",
    "format_pr_curve",
    "match_detections",
    "mean_ap",
    "parse_similar",
    "pr_curve",
]
