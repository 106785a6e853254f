"""Threat-actor-informed triage of application security logs."""

from ._core import (
    ConfigError,
    ParseError,
    analyze,
    anomaly_scores,
    generate_corpus,
    majority_vote,
    max_score,
    score_report,
    subsample_maxmin,
    weighted_metrics,
)

__all__ = [
    "ConfigError",
    "ParseError",
    "analyze",
    "anomaly_scores",
    "generate_corpus",
    "majority_vote",
    "max_score",
    "score_report",
    "subsample_maxmin",
    "weighted_metrics",
]
