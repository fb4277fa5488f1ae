"""Discrete Lyapunov functional for cyclic delay differential equations."""

from ._core import (
    ConfigError,
    Error,
    audit_names,
    list_registry,
    run,
    scenario_ini,
    segment_v,
    simulate,
    validate,
)

__all__ = [
    "ConfigError",
    "Error",
    "audit_names",
    "list_registry",
    "run",
    "scenario_ini",
    "segment_v",
    "simulate",
    "validate",
]
