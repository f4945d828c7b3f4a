"""Shared vocabulary: objective direction, quality report, outcome envelope."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Generic, Optional, TypeVar

import numpy as np

A = TypeVar("A")

#: Absolute tolerance used when comparing against closed-form constants.
ATOL = 1e-9


class Objective(enum.Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class DomainError(ValueError):
    """Input outside the domain of an operation (negative value, zero optimum, ...)."""


class DataError(ValueError):
    """Malformed input data. Carries the offending file and 1-based row when known."""

    def __init__(self, message: str, path: Optional[str] = None, row: Optional[int] = None):
        self.path = path
        self.row = row
        where = ""
        if path is not None:
            where = f"{path}"
            if row is not None:
                where += f", row {row}"
            where += ": "
        elif row is not None:
            where = f"row {row}: "
        super().__init__(where + message)


def safe_ratio(num: float, den: float) -> float:
    """``num / den`` with the zero-denominator convention: inf if num > 0 else 1."""
    if den == 0:
        return math.inf if num > 0 else 1.0
    return num / den


@dataclass(frozen=True)
class QualityReport:
    mech_value: float
    opt_value: float
    advice_value: float
    rho_hat: float
    ratio: float
    eta: Optional[float] = None
    # False when opt_value is a lower bound rather than the exact optimum.
    opt_exact: bool = True

    def to_dict(self) -> dict[str, Any]:
        d = {
            "mech_value": _num(self.mech_value),
            "opt_value": _num(self.opt_value),
            "advice_value": _num(self.advice_value),
            "rho_hat": _num(self.rho_hat),
            "ratio": _num(self.ratio),
            "eta": None if self.eta is None else _num(self.eta),
        }
        if not self.opt_exact:
            # Only a bound on the optimum is known: report it as such and claim no ratios.
            d["opt_bound"] = d["opt_value"]
            d["opt_value"] = d["rho_hat"] = d["ratio"] = None
            d["opt_exact"] = False
        return d


def _num(x: float) -> Any:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def make_report(
    objective: Objective,
    mech_value: float,
    opt_value: float,
    advice_value: float,
    eta: Optional[float] = None,
    *,
    opt_exact: bool = True,
) -> QualityReport:
    """Build a :class:`QualityReport` from raw objective values.

    For minimisation both ratios divide by the optimum; for maximisation the
    optimum is the numerator.  A zero denominator gives ``inf`` when the
    numerator is positive and 1 otherwise.
    """
    values = {"mech_value": mech_value, "opt_value": opt_value, "advice_value": advice_value}
    if eta is not None:
        values["eta"] = eta
    for name, v in values.items():
        if math.isnan(v) or v < 0:
            raise DomainError(f"{name} must be >= 0, got {v!r}")
    if objective is Objective.MINIMIZE:
        rho_hat = safe_ratio(advice_value, opt_value)
        ratio = safe_ratio(mech_value, opt_value)
    else:
        rho_hat = safe_ratio(opt_value, advice_value)
        ratio = safe_ratio(opt_value, mech_value)
    return QualityReport(
        mech_value=float(mech_value),
        opt_value=float(opt_value),
        advice_value=float(advice_value),
        rho_hat=rho_hat,
        ratio=ratio,
        eta=None if eta is None else float(eta),
        opt_exact=opt_exact,
    )


@dataclass(frozen=True)
class MechanismOutcome(Generic[A]):
    alternative: A
    payments: tuple[float, ...]
    report: QualityReport
    extra: dict[str, Any] = field(default_factory=dict, compare=False)


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for ``seed`` and an optional sub-stream index path."""
    if seed < 0 or seed >= 2**64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.default_rng([int(seed), *map(int, stream)])
