"""Python access to the asymdial core."""

import json

from . import _core
from ._core import (
    ContractViolation,
    ConfigError,
    ValidationError,
    classify,
    clarify_score,
    parse_user_message,
    satisfaction_stats,
    ssa,
)

__all__ = [
    "ContractViolation",
    "ConfigError",
    "ValidationError",
    "classify",
    "clarify_score",
    "generate_profile",
    "parse_user_message",
    "recorded_report",
    "satisfaction_stats",
    "ssa",
    "validate_record",
]


def generate_profile(seed, uncertainty=0, difficulty=None):
    """Seeded profile as a dict."""
    return json.loads(_core.generate_profile_json(seed, uncertainty, difficulty))


def validate_record(document):
    """List of (path, message) schema issues; empty when valid."""
    text = document if isinstance(document, str) else json.dumps(document)
    return _core.validate_record_json(text)


def recorded_report(document):
    """Report over recorded per-cell aggregates."""
    text = document if isinstance(document, str) else json.dumps(document)
    return json.loads(_core.recorded_report_json(text))
