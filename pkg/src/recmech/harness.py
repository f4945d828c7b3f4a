"""Evaluation harness: strategyproofness auditor, prediction grids and sweeps."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from . import auctions, facility, house, instances, scheduling
from .core import DomainError, rng_for
from .facility import CmpConfig, FacilityObjective, Point2, TieBreak
from .io import ingest_points_csv  # noqa: F401  (re-exported for harness users)

GAIN_TOL = 1e-9
MIN_MISREPORTS = 16
# Stored violation records are capped; the count is always exact.
MAX_RECORDED = 1000


class Setting(enum.Enum):
    FACILITY_MBB = "facility-mbb"
    FACILITY_CMP = "facility-cmp"
    SCHEDULING = "scheduling"
    HOUSE = "house"
    MULTI_UNIT = "multiunit"


@dataclass(frozen=True)
class Violation:
    trial: int
    agent: int
    misreport: str
    gain: float

    def to_dict(self) -> dict[str, Any]:
        return {"trial": self.trial, "agent": self.agent, "misreport": self.misreport, "gain": self.gain}


@dataclass(frozen=True)
class AuditReport:
    setting: str
    seed: int
    trials: int
    misreports: int
    violation_count: int
    violations: tuple[Violation, ...]
    max_gain: float
    fault: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        d = {
            "setting": self.setting,
            "seed": self.seed,
            "trials": self.trials,
            "misreports": self.misreports,
            "violation_count": self.violation_count,
            "violations": [v.to_dict() for v in self.violations],
            "max_gain": self.max_gain,
        }
        if self.fault is not None:
            d["fault"] = self.fault
        return d


# Each trial function returns a list of (agent, misreport label, gain).
TrialResult = list[tuple[int, str, float]]


def _facility_misreports(rng: np.random.Generator, z: np.ndarray, pts: np.ndarray, a_hat: np.ndarray):
    out = []
    for k in range(8):
        out.append((f"gauss{k}", z + rng.normal(0, 0.1, 2)))
    for k in range(4):
        out.append((f"jump{k}", rng.uniform(-3, 3, 2)))
    out.append(("to-advice", a_hat.copy()))
    out.append(("mirror-advice", 2 * z - a_hat))
    out.append(("far-low", pts.min(axis=0) - 10))
    out.append(("far-high", pts.max(axis=0) + 10))
    out.append(("other-agent", pts[rng.integers(len(pts))].copy()))
    return out


def _trial_facility(seed: int, t: int, cmp_mode: bool, fault: Optional[str]) -> TrialResult:
    rng = rng_for(seed, t)
    n = int(rng.integers(1, 21))
    pts = rng.random((n, 2))
    a_hat = rng.uniform(-0.5, 1.5, 2)
    if cmp_mode:
        cfg = CmpConfig(float(rng.choice([0.0, 0.25, 0.5, 0.75, 0.99])), TieBreak(rng.choice(["low", "high"])))
        rule = lambda p: facility.cmp_point(p, a_hat, cfg)  # noqa: E731
    else:
        rule = lambda p: facility.mbb_point(p, a_hat)  # noqa: E731
    i = int(rng.integers(n))
    z = pts[i].copy()
    truth = math.dist(z, rule(pts))
    res = []
    for label, rep in _facility_misreports(rng, z, pts, a_hat):
        p2 = pts.copy()
        p2[i] = rep
        res.append((i, label, truth - math.dist(z, rule(p2))))
    return res


def _negated_pay(costs, weights, j):
    win, p = scheduling._pay(costs, weights, j)
    return win, -p


def _sched_utility(costs_true, costs_rep, a_hat, beta, i, pay_rule) -> float:
    alloc, pay = scheduling.asg_payments(costs_rep, a_hat, beta, pay_rule)
    work = sum(costs_true[i, j] for j, k in enumerate(alloc) if k == i)
    return float(pay[i] - work)


def _trial_scheduling(seed: int, t: int, fault: Optional[str]) -> TrialResult:
    rng = rng_for(seed, t)
    # A lone machine is paid its declared cost, which is manipulable; audit n >= 2 only.
    n, m = int(rng.integers(2, 5)), int(rng.integers(1, 6))
    costs = rng.random((n, m))
    if rng.random() < 0.2:
        costs = np.round(costs, 1) + 0.1
    beta = float(rng.uniform(1, n))
    a_hat = tuple(int(k) for k in rng.integers(0, n, m))
    pay_rule = _negated_pay if fault == "negate-payments" else None
    i = int(rng.integers(n))
    truth = _sched_utility(costs, costs, a_hat, beta, i, pay_rule)
    res = []
    for k in range(MIN_MISREPORTS):
        rep = costs.copy()
        row = costs[i] * np.exp(rng.uniform(-math.log(8), math.log(8), m))
        label = f"scale{k}"
        if k % 4 == 1:
            row[rng.integers(m)] = np.inf
            label = f"inf-spike{k}"
        elif k % 4 == 2:
            row[rng.integers(m)] = 0.0
            label = f"zero-spike{k}"
        elif k == 15:
            row[:] = np.inf
            label = "decline-all"
        rep[i] = row
        res.append((i, label, _sched_utility(costs, rep, a_hat, beta, i, pay_rule) - truth))
    return res


def _trial_house(seed: int, t: int, fault: Optional[str]) -> TrialResult:
    rng = rng_for(seed, t)
    n = int(rng.integers(2, 7))
    norm = house.Normalization.UNIT_RANGE if rng.random() < 0.5 else house.Normalization.UNIT_SUM
    vals = instances.random_valuations(rng, n, norm).values
    # Alternate between a recommended endowment and the identity endowment.
    endow = tuple(int(h) for h in rng.permutation(n)) if t % 2 == 0 else tuple(range(n))
    i = int(rng.integers(n))
    truth = vals[i, house._ttc(vals, endow)[i]]
    res = []
    for k in range(MIN_MISREPORTS):
        row = vals[i].copy()
        if k < 8:
            row = row[rng.permutation(n)]
            label = f"permute{k}"
        elif k < 14:
            a, b = rng.choice(n, 2, replace=False)
            row[a], row[b] = row[b], row[a]
            label = f"swap{k}"
        elif k == 14:
            row = row[np.argsort(np.argsort(-row))]  # reversed preference order
            label = "reverse"
        else:
            row = np.roll(row, 1)
            label = "rotate"
        rep = vals.copy()
        rep[i] = row
        res.append((i, label, float(vals[i, house._ttc(rep, endow)[i]] - truth)))
    return res


def _mu_utility(curves_true, curves_rep, a_hat, i) -> float:
    out, rng_ = auctions.mir_allocate(curves_rep, a_hat)
    pay = auctions.vcg_payments_over_range(curves_rep, rng_, out)
    return float(curves_true[i, out[i]] - pay[i])


def _trial_multiunit(seed: int, t: int, fault: Optional[str]) -> TrialResult:
    rng = rng_for(seed, t)
    n, m = int(rng.integers(1, 5)), int(rng.integers(0, 17))
    curves = np.array([instances.random_curve(rng, m) for _ in range(n)])
    a_hat = instances.random_feasible_counts(rng, n, m)
    i = int(rng.integers(n))
    truth = _mu_utility(curves, curves, a_hat, i)
    res = []
    for k in range(MIN_MISREPORTS):
        if k < 8:
            row = curves[i] * math.exp(rng.uniform(-math.log(8), math.log(8)))
            label = f"rescale{k}"
        elif k < 14:
            row = instances.random_curve(rng, m)
            label = f"random-curve{k}"
        elif k == 14:
            row = np.full(m + 1, curves[i, -1])
            row[0] = 0.0
            label = "flat-max"
        else:
            row = np.zeros(m + 1)
            label = "zero"
        rep = curves.copy()
        rep[i] = row
        res.append((i, label, _mu_utility(curves, rep, a_hat, i) - truth))
    return res


def _run_trial(setting: Setting, seed: int, t: int, fault: Optional[str]) -> TrialResult:
    if setting is Setting.FACILITY_MBB:
        return _trial_facility(seed, t, False, fault)
    if setting is Setting.FACILITY_CMP:
        return _trial_facility(seed, t, True, fault)
    if setting is Setting.SCHEDULING:
        return _trial_scheduling(seed, t, fault)
    if setting is Setting.HOUSE:
        return _trial_house(seed, t, fault)
    return _trial_multiunit(seed, t, fault)


def _run_chunk(setting: Setting, seed: int, start: int, stop: int, fault: Optional[str]):
    return [_run_trial(setting, seed, t, fault) for t in range(start, stop)]


FAULTS = {Setting.SCHEDULING: ("negate-payments",)}


def audit_sp(setting, seed: int, trials: int, *, fault: Optional[str] = None, threads: int = 1) -> AuditReport:
    """Sample instances and unilateral misreports; record every strict utility gain.

    Trials are seeded individually, so the report does not depend on ``threads``.
    """
    try:
        setting = Setting(setting)
    except ValueError:
        raise DomainError(f"unknown setting {setting!r}; expected one of {', '.join(s.value for s in Setting)}") from None
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if fault is not None and fault not in FAULTS.get(setting, ()):
        raise DomainError(f"fault {fault!r} is not available for {setting.value}")
    if threads > 1 and trials > 1:
        step = math.ceil(trials / (threads * 4))
        bounds = [(s, min(s + step, trials)) for s in range(0, trials, step)]
        with ProcessPoolExecutor(max_workers=threads) as ex:
            futs = [ex.submit(_run_chunk, setting, seed, a, b, fault) for a, b in bounds]
            results = [r for f in futs for r in f.result()]
    else:
        results = _run_chunk(setting, seed, 0, trials, fault)

    viols, count, total, max_gain = [], 0, 0, -math.inf
    for t, trial in enumerate(results):
        for agent, label, gain in trial:
            total += 1
            max_gain = max(max_gain, gain)
            if gain > GAIN_TOL:
                count += 1
                if len(viols) < MAX_RECORDED:
                    viols.append(Violation(t, agent, label, gain))
    return AuditReport(setting.value, seed, trials, total, count, tuple(viols), max_gain, fault)


# --- prediction grids and sweeps ------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    idx: int
    param: Optional[float]
    rho_hat: float
    eta: Optional[float]
    ratio: float

    def to_dict(self) -> dict[str, Any]:
        return {"idx": self.idx, "param": self.param, "rho_hat": self.rho_hat, "eta": self.eta, "ratio": self.ratio}


def grid_predictions(points, k: int) -> list[Point2]:
    """k x k grid over the bounding box, x-major, corners included, duplicates dropped."""
    if k < 1:
        raise DomainError("grid size k must be >= 1")
    pts = facility.as_points(points)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    xs = np.linspace(lo[0], hi[0], k)
    ys = np.linspace(lo[1], hi[1], k)
    seen, out = set(), []
    for x in xs:
        for y in ys:
            p = Point2(float(x), float(y))
            if p not in seen:
                seen.add(p)
                out.append(p)
    return out


def run_facility_sweep(points, k: int, mechanism: str = "cmp", cfg: CmpConfig = CmpConfig()) -> list[SweepRow]:
    """Run a facility mechanism once per grid prediction; the optimum is computed once."""
    pts = facility.as_points(points)
    if mechanism == "cmp":
        objective = FacilityObjective.UTILITARIAN
    elif mechanism == "mbb":
        objective = FacilityObjective.EGALITARIAN
    else:
        raise DomainError(f"unknown facility mechanism {mechanism!r}")
    optimum = facility.optimal_location(pts, objective)
    if optimum[1] <= 0:
        raise DomainError("the optimum is 0 (all points coincide); ratios are undefined")
    rows = []
    for idx, a_hat in enumerate(grid_predictions(pts, k)):
        if mechanism == "cmp":
            rep = facility.cmp(pts, a_hat, cfg, optimum=optimum).report
            param = cfg.lam
        else:
            rep = facility.mbb(pts, a_hat, optimum=optimum).report
            param = None
        rows.append(SweepRow(idx, param, rep.rho_hat, rep.eta, rep.ratio))
    return rows


def run_cmp_sweep(points, k: int, lam: float, tie_break: TieBreak = TieBreak.LOW) -> list[SweepRow]:
    return run_facility_sweep(points, k, "cmp", CmpConfig(lam, TieBreak(tie_break)))


def run_random_sweep(setting: str, count: int, seed: int, beta: Optional[float] = None) -> list[SweepRow]:
    """Random instances with half-optimal, half-uniform recommendations; one row per instance.

    ``setting`` is one of scheduling, house-unit-range, house-unit-sum,
    house-none or multiunit.  For scheduling, ``beta`` defaults to n.
    """
    rows = []
    for idx in range(count):
        s = instances.sample_random(setting, None, seed, idx)
        if setting == "scheduling":
            b = float(s.instance.n) if beta is None else min(max(beta, 1.0), float(s.instance.n))
            rep = scheduling.asg(s.instance, s.advice, scheduling.AsgConfig(b)).report
            rows.append(SweepRow(idx, b, rep.rho_hat, None, rep.ratio))
        elif setting.startswith("house-"):
            rep = house.ttc(s.instance, s.advice, optimum=s.optimum[1]).report
            rows.append(SweepRow(idx, None, rep.rho_hat, None, rep.ratio))
        elif setting == "multiunit":
            rep = auctions.mir_with_advice(s.instance, s.advice).report
            rows.append(SweepRow(idx, None, rep.rho_hat, None, rep.ratio))
        else:
            raise DomainError(f"unknown sweep setting {setting!r}")
    return rows


def two_cluster_points(n: int, seed: int) -> facility.FacilityInstance:
    """Synthetic stand-in for location data: two Gaussian clusters of unequal size."""
    rng = rng_for(seed)
    k = int(round(0.6 * n))
    a = rng.normal((0.0, 0.0), 0.3, (k, 2))
    b = rng.normal((3.0, 1.5), 0.5, (n - k, 2))
    return facility.FacilityInstance(np.vstack([a, b]))
