"""Event-based STL runtime with online modification."""

from ._core import (
    SCHEMA_VERSION,
    RespecError,
    Session,
    builtin_scenarios,
    compile,
    scenario,
    validate_trace,
)

__all__ = [
    "SCHEMA_VERSION",
    "RespecError",
    "Session",
    "builtin_scenarios",
    "compile",
    "scenario",
    "validate_trace",
]
