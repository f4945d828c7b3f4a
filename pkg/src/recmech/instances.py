"""Named adversarial instances and seeded random samplers for every setting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import auctions, facility, house, scheduling
from .core import DomainError, rng_for

DEFAULT_EPS = 1e-6

NAMED_KEYS = (
    "fl-worst-max",
    "fl-worst-sum",
    "fl-sum1",
    "sched-lb1",
    "sched-lb2",
    "sched-jump",
    "house-lb-unit-range",
    "house-lb-unit-sum",
)


@dataclass(frozen=True)
class NamedInstance:
    key: str
    params: dict[str, Any]
    instance: Any
    advice: Any = None
    # Optional extras, e.g. the predicted matrix of the jump example or the CMP config the instance is built for.
    extra: dict[str, Any] = field(default_factory=dict)


def fl_worst_max(rho_hat: float) -> tuple[facility.FacilityInstance, facility.Point2]:
    """Three points on the unit circle; advice on the diagonal at distance rho_hat-1 from the centre."""
    if not 1.0 <= rho_hat <= 1.0 + math.sqrt(2) + 1e-12:
        raise DomainError("the worst-case MBB family requires 1 <= rho_hat <= 1+sqrt(2)")
    s = 1 / math.sqrt(2)
    pts = facility.FacilityInstance([(0.0, 1.0), (1.0, 0.0), (-s, -s)])
    d = (rho_hat - 1.0) * s
    return pts, facility.Point2(d, d)


def fl_worst_sum(m: int) -> tuple[facility.FacilityInstance, facility.Point2]:
    """m agents at (0,1), m-1 at (1,0), one at (-1,0); advice (1,0)."""
    if m < 2:
        raise DomainError("the worst-case CMP family requires m >= 2")
    pts = [(0.0, 1.0)] * m + [(1.0, 0.0)] * (m - 1) + [(-1.0, 0.0)]
    return facility.FacilityInstance(pts), facility.Point2(1.0, 0.0)


def fl_sum1() -> tuple[facility.FacilityInstance, facility.Point2]:
    """The four corners of [-1,1]^2 with advice (0,1)."""
    pts = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
    return facility.FacilityInstance(pts), facility.Point2(0.0, 1.0)


def build(key: str, **params) -> NamedInstance:
    """Construct a named instance. Unknown keys and out-of-range parameters raise DomainError."""
    eps = params.get("eps", DEFAULT_EPS)
    if key == "fl-worst-max":
        rho = params.get("rho", 1.5)
        inst, adv = fl_worst_max(rho)
        return NamedInstance(key, {"rho": rho}, inst, adv)
    if key == "fl-worst-sum":
        m = int(params.get("m", 3))
        inst, adv = fl_worst_sum(m)
        cfg = facility.CmpConfig(0.0, facility.TieBreak.LOW)
        return NamedInstance(key, {"m": m}, inst, adv, {"cmp": cfg})
    if key == "fl-sum1":
        inst, adv = fl_sum1()
        cfg = facility.CmpConfig(0.75, facility.TieBreak.HIGH)
        return NamedInstance(key, {}, inst, adv, {"cmp": cfg})
    if key in ("sched-lb1", "sched-lb2"):
        n = int(params.get("n", 3 if key == "sched-lb1" else 4))
        beta = float(params.get("beta", 1.0))
        rho = float(params.get("rho", 2.0 if key == "sched-lb1" else 6.0))
        gen = scheduling.gen_lb_case1 if key == "sched-lb1" else scheduling.gen_lb_case2
        inst, adv = gen(n, rho, beta, eps)
        return NamedInstance(key, {"n": n, "rho": rho, "beta": beta, "eps": eps}, inst, adv, {"beta": beta})
    if key == "sched-jump":
        n = int(params.get("n", 3))
        eps = params.get("eps", 0.1)
        pred, act = scheduling.gen_jump_example(n, eps)
        adv, _ = scheduling.opt_makespan(act)
        return NamedInstance(key, {"n": n, "eps": eps}, act, adv, {"predicted": pred, "beta": 1.0})
    if key in ("house-lb-unit-range", "house-lb-unit-sum"):
        n = int(params.get("n", 4))
        rho = params.get("rho")
        ur = key == "house-lb-unit-range"
        norm = house.Normalization.UNIT_RANGE if ur else house.Normalization.UNIT_SUM
        if rho is None:
            # Fixed variant: the free parameter equals eps.
            v = house.unit_range_lb(n, eps, eps) if ur else house.unit_sum_lb(n, eps, eps)
        else:
            v, _ = house.gen_ttc_lb(n, float(rho), norm, eps)
        p = {"n": n, "eps": eps} if rho is None else {"n": n, "eps": eps, "rho": float(rho)}
        return NamedInstance(key, p, v, house.shifted_endowment(n))
    raise DomainError(f"unknown named instance {key!r}; expected one of {', '.join(NAMED_KEYS)}")


# --- random samplers --------------------------------------------------------


@dataclass(frozen=True)
class Sample:
    setting: str
    instance: Any
    advice: Any
    # (alternative, value) of the exact optimum when the sampler computed it.
    optimum: Optional[tuple[Any, float]] = None
    perturbed: bool = False


def _facility(rng: np.random.Generator, n: Optional[int], objective: facility.FacilityObjective) -> Sample:
    n = int(rng.integers(1, 51)) if n is None else n
    pts = facility.FacilityInstance(rng.random((n, 2)))
    a_star, opt = facility.optimal_location(pts, objective)
    if rng.random() < 0.5:
        adv = facility.Point2(*(np.asarray(a_star) + rng.normal(0, 0.05, 2)))
        pert = True
    else:
        adv = facility.Point2(*rng.uniform(-0.5, 1.5, 2))
        pert = False
    return Sample("facility", pts, adv, (a_star, opt), pert)


def _scheduling(rng: np.random.Generator, size) -> Sample:
    n, m = size if size is not None else (int(rng.integers(1, 5)), int(rng.integers(1, 6)))
    if n**m > scheduling.BRUTE_FORCE_CAP:
        raise DomainError(f"n**m = {n**m} exceeds the oracle cap")
    costs = rng.random((n, m))
    if rng.random() < 0.2:
        costs = np.round(costs, 1) + 0.1  # coarse values exercise tie-breaking
    inst = scheduling.SchedulingInstance(costs)
    opt_a, opt = scheduling.opt_makespan(inst)
    if rng.random() < 0.5:
        adv = tuple(int(rng.integers(n)) if rng.random() < 0.1 else i for i in opt_a)
        pert = True
    else:
        adv = tuple(int(i) for i in rng.integers(0, n, m))
        pert = False
    return Sample("scheduling", inst, adv, (opt_a, opt), pert)


def random_valuations(rng: np.random.Generator, n: int, norm: house.Normalization) -> house.ValuationMatrix:
    v = rng.random((n, n))
    if norm is house.Normalization.UNIT_RANGE:
        if n == 1:
            raise DomainError("unit-range valuations need n >= 2")
        lo = v.min(axis=1, keepdims=True)
        hi = v.max(axis=1, keepdims=True)
        v = (v - lo) / (hi - lo)
        # exact endpoints after rescaling
        v[np.arange(n), v.argmax(axis=1)] = 1.0
        v[np.arange(n), v.argmin(axis=1)] = 0.0
    elif norm is house.Normalization.UNIT_SUM:
        v = v / v.sum(axis=1, keepdims=True)
    return house.ValuationMatrix(v, norm)


def _house(rng: np.random.Generator, n: Optional[int], norm: house.Normalization) -> Sample:
    n = int(rng.integers(2, 9)) if n is None else n
    v = random_valuations(rng, n, norm)
    opt_m, opt = house.opt_matching(v)
    if rng.random() < 0.5:
        adv = list(opt_m)
        if rng.random() < 0.5 and n >= 2:
            i, j = rng.choice(n, 2, replace=False)
            adv[i], adv[j] = adv[j], adv[i]
        adv, pert = tuple(adv), True
    else:
        adv, pert = tuple(int(h) for h in rng.permutation(n)), False
    return Sample("house", v, adv, (opt_m, opt), pert)


def random_curve(rng: np.random.Generator, m: int) -> np.ndarray:
    """Nondecreasing curve with value 0 at q=0; shape drawn from concave, convex, step or noisy."""
    kind = int(rng.integers(4))
    q = np.arange(m + 1, dtype=float)
    scale = rng.uniform(0.5, 10.0)
    if m == 0:
        return np.zeros(1)
    if kind == 0:
        c = scale * np.sqrt(q / m)
    elif kind == 1:
        c = scale * (q / m) ** rng.uniform(1.5, 3.0)
    elif kind == 2:
        t = int(rng.integers(1, m + 1))
        c = np.where(q >= t, scale, 0.0)
    else:
        c = np.concatenate([[0.0], np.cumsum(rng.exponential(1.0, m) * (rng.random(m) < 0.7))])
    c[0] = 0.0
    return np.maximum.accumulate(c)


def random_feasible_counts(rng: np.random.Generator, n: int, m: int) -> tuple[int, ...]:
    k = int(rng.integers(0, m + 1))
    return tuple(int(x) for x in rng.multinomial(k, np.full(n, 1.0 / n)))


def _multiunit(rng: np.random.Generator, size) -> Sample:
    n, m = size if size is not None else (int(rng.integers(1, 5)), int(rng.integers(0, 33)))
    inst = auctions.MultiUnitInstance(np.array([random_curve(rng, m) for _ in range(n)]))
    opt_a, opt = auctions.mu_opt(inst)
    if rng.random() < 0.5:
        adv = list(opt_a)
        if n >= 2 and rng.random() < 0.5:
            i, j = rng.choice(n, 2, replace=False)
            shift = min(adv[i], int(rng.integers(0, 3)))
            adv[i] -= shift
            adv[j] += shift
        adv, pert = tuple(adv), True
    else:
        adv, pert = random_feasible_counts(rng, n, m), False
    return Sample("multiunit", inst, adv, (opt_a, opt), pert)


SETTINGS = ("facility-egalitarian", "facility-utilitarian", "scheduling", "house-unit-range", "house-unit-sum", "house-none", "multiunit")


def sample_random(setting: str, size=None, seed: int = 0, *stream: int) -> Sample:
    """Draw one seeded instance plus recommendation.

    Half the recommendations are a (possibly lightly perturbed) optimum, half
    are uniform over feasible outcomes.  ``size`` is n, or (n, m) for
    scheduling and multi-unit settings; ``None`` draws it at random.
    """
    rng = rng_for(seed, *stream)
    if setting == "facility-egalitarian":
        return _facility(rng, size, facility.FacilityObjective.EGALITARIAN)
    if setting == "facility-utilitarian":
        return _facility(rng, size, facility.FacilityObjective.UTILITARIAN)
    if setting == "scheduling":
        return _scheduling(rng, size)
    if setting.startswith("house-"):
        return _house(rng, size, house.Normalization(setting[len("house-"):]))
    if setting == "multiunit":
        return _multiunit(rng, size)
    raise DomainError(f"unknown setting {setting!r}; expected one of {', '.join(SETTINGS)}")
