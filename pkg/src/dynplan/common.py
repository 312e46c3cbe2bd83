"""Small types shared by every module."""
from __future__ import annotations

from dataclasses import dataclass


class ContractViolation(ValueError):
    """Raised when a caller breaks an operation's precondition."""


@dataclass
class MetricsCounters:
    """Per-trial work counters; only ever incremented."""

    collision_checks: int = 0
    nn_lookups: int = 0
