"""House allocation: Top Trading Cycles seeded with a recommended matching."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import DomainError, MechanismOutcome, Objective, make_report

Matching = tuple[int, ...]

MATCHING_CAP = 1000
_NORM_TOL = 1e-9


class Normalization(enum.Enum):
    UNIT_RANGE = "unit-range"
    UNIT_SUM = "unit-sum"
    NONE = "none"


@dataclass(frozen=True)
class ValuationMatrix:
    """``values[i, j]`` is agent i's value for house j."""

    values: np.ndarray
    normalization: Normalization = Normalization.NONE

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 1:
            raise DomainError(f"expected a square n x n valuation matrix, got shape {v.shape}")
        if not np.isfinite(v).all() or (v < 0).any():
            raise DomainError("valuations must be finite and nonnegative")
        norm = Normalization(self.normalization)
        bad = _normalization_violation(v, norm)
        if bad is not None:
            raise DomainError(f"row {bad + 1} violates {norm.value} normalization")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "normalization", norm)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _normalization_violation(v: np.ndarray, norm: Normalization) -> Optional[int]:
    if norm is Normalization.UNIT_RANGE:
        ok = (np.abs(v.max(axis=1) - 1) <= _NORM_TOL) & (np.abs(v.min(axis=1)) <= _NORM_TOL)
    elif norm is Normalization.UNIT_SUM:
        ok = np.abs(v.sum(axis=1) - 1) <= _NORM_TOL
    else:
        return None
    bad = np.flatnonzero(~ok)
    return int(bad[0]) if bad.size else None


def _values(v) -> np.ndarray:
    return v.values if isinstance(v, ValuationMatrix) else ValuationMatrix(v).values


def check_matching(n: int, m: Sequence[int]) -> Matching:
    m = tuple(int(h) for h in m)
    if len(m) != n or sorted(m) != list(range(n)):
        raise DomainError(f"not a permutation of 0..{n - 1}: {m}")
    return m


def welfare(v, m: Sequence[int]) -> float:
    vals = _values(v)
    m = check_matching(vals.shape[0], m)
    return float(vals[np.arange(len(m)), list(m)].sum())


def ttc_allocate(v, endowment: Sequence[int]) -> Matching:
    """Top Trading Cycles from an initial endowment.

    Each round every remaining agent points at the owner of its favourite
    remaining house (lowest house index on ties); every cycle is traded and
    removed.
    """
    vals = _values(v)
    return _ttc(vals, check_matching(vals.shape[0], endowment))


def _ttc(vals: np.ndarray, endowment: Matching) -> Matching:
    n = vals.shape[0]
    house_of = list(endowment)
    owner = {h: i for i, h in enumerate(house_of)}
    remaining = set(range(n))
    result = [-1] * n
    while remaining:
        avail = sorted(owner)
        avail_arr = np.array(avail)
        points_to = {}
        wants = {}
        for i in remaining:
            row = vals[i, avail_arr]
            h = avail[int(np.argmax(row))]
            wants[i] = h
            points_to[i] = owner[h]
        on_cycle = set()
        state = {}
        for start in sorted(remaining):
            path = []
            cur = start
            while cur not in state:
                state[cur] = start
                path.append(cur)
                cur = points_to[cur]
            if state[cur] == start:
                on_cycle.update(path[path.index(cur):])
        for i in on_cycle:
            result[i] = wants[i]
        for i in on_cycle:
            del owner[house_of[i]]
        remaining -= on_cycle
    return tuple(result)


def ttc(v, endowment: Sequence[int], *, optimum: Optional[float] = None) -> MechanismOutcome[Matching]:
    vals = _values(v)
    out = ttc_allocate(vals, endowment)
    opt = opt_matching(vals)[1] if optimum is None else optimum
    mech = welfare(vals, out)
    advice = welfare(vals, endowment)
    opt = max(opt, mech, advice)
    report = make_report(Objective.MAXIMIZE, mech, opt, advice)
    return MechanismOutcome(out, (0.0,) * len(out), report)


def opt_matching(v) -> tuple[Matching, float]:
    """Maximum-welfare perfect matching."""
    vals = _values(v)
    n = vals.shape[0]
    if n > MATCHING_CAP:
        raise DomainError(f"n = {n} exceeds the matching cap {MATCHING_CAP}")
    rows, cols = linear_sum_assignment(vals, maximize=True)
    m = tuple(int(c) for _, c in sorted(zip(rows, cols)))
    return m, float(vals[np.arange(n), list(m)].sum())


def brute_force_matching(v) -> tuple[Matching, float]:
    vals = _values(v)
    n = vals.shape[0]
    best, best_val = None, -1.0
    idx = np.arange(n)
    for perm in itertools.permutations(range(n)):
        w = float(vals[idx, perm].sum())
        if w > best_val:
            best, best_val = perm, w
    return tuple(best), best_val


# --- lower-bound families --------------------------------------------------


def shifted_endowment(n: int) -> Matching:
    """Agent i is endowed with house i+1 (cyclically)."""
    return tuple((i + 1) % n for i in range(n))


def unit_range_lb(n: int, x: float, eps: float) -> ValuationMatrix:
    """Agent 0 values houses 0,1 at 1-eps and 1; agent i>0 values house i at 1 and house i+1 at x."""
    if n < 3:
        raise DomainError("requires n >= 3")
    if not 0 <= x <= 1 or not 0 < eps < 1:
        raise DomainError("requires 0 <= x <= 1 and 0 < eps < 1")
    v = np.zeros((n, n))
    v[0, 0], v[0, 1] = 1.0 - eps, 1.0
    for i in range(1, n):
        v[i, i] = 1.0
        v[i, (i + 1) % n] = x
    return ValuationMatrix(v, Normalization.UNIT_RANGE)


def unit_sum_lb(n: int, y: float, eps: float) -> ValuationMatrix:
    """Agent 0 is near-uniform with a slight preference for house 1; agent i>0 splits 1-y / y over houses i, i+1."""
    if n < 3:
        raise DomainError("requires n >= 3")
    if not 0 <= y <= 0.5 or not 0 < eps < 1.0 / n:
        raise DomainError("requires 0 <= y <= 1/2 and 0 < eps < 1/n")
    v = np.zeros((n, n))
    v[0, :] = 1.0 / n
    v[0, 0] -= eps
    v[0, 1] += eps
    for i in range(1, n):
        v[i, i] = 1.0 - y
        v[i, (i + 1) % n] = y
    return ValuationMatrix(v, Normalization.UNIT_SUM)


def gen_ttc_lb(n: int, rho_hat: float, normalization: Normalization, eps: float = 1e-6) -> tuple[ValuationMatrix, Matching]:
    """Instance on which TTC from the shifted endowment keeps the endowment.

    The free parameter is solved from ``rho_hat`` so that the endowment's
    quality approaches ``rho_hat`` as ``eps`` goes to 0.
    """
    norm = Normalization(normalization)
    if n < 3:
        raise DomainError("requires n >= 3")
    if norm is Normalization.UNIT_RANGE:
        if not 1.0 <= rho_hat <= n:
            raise DomainError(f"unit-range family requires 1 <= rho_hat <= n = {n}")
        x = (n - rho_hat) / (rho_hat * (n - 1))
        return unit_range_lb(n, x, eps), shifted_endowment(n)
    if norm is Normalization.UNIT_SUM:
        top = n * (n - 1) + 1
        if not 1.0 <= rho_hat <= top:
            raise DomainError(f"unit-sum family requires 1 <= rho_hat <= n^2-n+1 = {top}")
        y = (n * (n - 1) - rho_hat + 1) / (n * (n - 1) * (rho_hat + 1))
        return unit_sum_lb(n, y, eps), shifted_endowment(n)
    raise DomainError("normalization must be unit-range or unit-sum")
