"""Strategyproof mechanisms that take a recommended outcome as advice.

Settings: facility location in the plane, makespan scheduling on unrelated
machines, house allocation and multi-unit auctions.  Every mechanism returns
a :class:`~recmech.core.MechanismOutcome` whose report compares the outcome
and the recommendation against the exact optimum.
"""

from .core import (
    DataError,
    DomainError,
    MechanismOutcome,
    Objective,
    QualityReport,
    make_report,
    rng_for,
)

__all__ = [
    "DataError",
    "DomainError",
    "MechanismOutcome",
    "Objective",
    "QualityReport",
    "make_report",
    "rng_for",
]
__version__ = "0.1.0"
