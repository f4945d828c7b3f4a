"""Single-facility location in the Euclidean plane with a recommended point.

Two mechanisms are provided: the Minimum Bounding Box mechanism (egalitarian
cost) and the Coordinatewise Median with Predictions (utilitarian cost), plus
the exact baselines they are measured against.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .core import DomainError, MechanismOutcome, Objective, make_report


class Point2(NamedTuple):
    x: float
    y: float


class TieBreak(enum.Enum):
    LOW = "low"
    HIGH = "high"


class FacilityObjective(enum.Enum):
    EGALITARIAN = "egalitarian"
    UTILITARIAN = "utilitarian"


@dataclass(frozen=True)
class FacilityInstance:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise DomainError(f"expected a nonempty (n, 2) array of points, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DomainError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class CmpConfig:
    lam: float = 0.0
    tie_break: TieBreak = TieBreak.LOW

    def __post_init__(self):
        if not (0.0 <= self.lam < 1.0):
            raise DomainError(f"lambda must lie in [0, 1), got {self.lam}")


Points = Union[FacilityInstance, np.ndarray, Sequence[Sequence[float]]]


def as_points(inst: Points) -> np.ndarray:
    if isinstance(inst, FacilityInstance):
        return inst.points
    return FacilityInstance(np.asarray(inst, dtype=float)).points


def _dists(pts: np.ndarray, a) -> np.ndarray:
    return np.hypot(pts[:, 0] - a[0], pts[:, 1] - a[1])


def egalitarian_cost(inst: Points, a) -> float:
    return float(_dists(as_points(inst), a).max())


def utilitarian_cost(inst: Points, a) -> float:
    return float(math.fsum(_dists(as_points(inst), a)))


def social_cost(inst: Points, a, objective: FacilityObjective) -> float:
    if objective is FacilityObjective.EGALITARIAN:
        return egalitarian_cost(inst, a)
    return utilitarian_cost(inst, a)


# --- one-dimensional selection rules -------------------------------------


def minmax_p(xs: Sequence[float], a_hat: float) -> float:
    """Clamp the recommended coordinate into ``[min xs, max xs]``."""
    lo, hi = float(np.min(xs)), float(np.max(xs))
    if a_hat < lo:
        return lo
    if a_hat > hi:
        return hi
    return float(a_hat)


def median(values: Sequence[float], tie_break: TieBreak = TieBreak.LOW) -> float:
    """Median that always returns an element of ``values``.

    Even-length inputs return the lower or upper middle element.
    """
    s = np.sort(np.asarray(values, dtype=float))
    n = s.shape[0]
    if n == 0:
        raise DomainError("median of an empty sequence")
    if n % 2 == 1:
        return float(s[n // 2])
    return float(s[n // 2 - 1] if tie_break is TieBreak.LOW else s[n // 2])


def n_copies(lam: float, n: int) -> int:
    # floor(lam * n); the guard absorbs representation error such as 0.29 * 100.
    return int(math.floor(lam * n + 1e-9))


def padded_median(xs: Sequence[float], a_hat: float, lam: float, tie_break: TieBreak) -> float:
    xs = np.asarray(xs, dtype=float)
    k = n_copies(lam, xs.shape[0])
    return median(np.concatenate([xs, np.full(k, float(a_hat))]), tie_break)


# --- mechanisms -----------------------------------------------------------


def mbb_point(inst: Points, a_hat) -> Point2:
    pts = as_points(inst)
    return Point2(minmax_p(pts[:, 0], a_hat[0]), minmax_p(pts[:, 1], a_hat[1]))


def cmp_point(inst: Points, a_hat, cfg: CmpConfig = CmpConfig()) -> Point2:
    pts = as_points(inst)
    return Point2(
        padded_median(pts[:, 0], a_hat[0], cfg.lam, cfg.tie_break),
        padded_median(pts[:, 1], a_hat[1], cfg.lam, cfg.tie_break),
    )


def coordinatewise_median(inst: Points, tie_break: TieBreak = TieBreak.LOW) -> Point2:
    pts = as_points(inst)
    return Point2(median(pts[:, 0], tie_break), median(pts[:, 1], tie_break))


def _report(pts, out, a_hat, objective: FacilityObjective, optimum=None):
    a_star, opt = optimum if optimum is not None else optimal_location(pts, objective)
    mech = social_cost(pts, out, objective)
    advice = social_cost(pts, a_hat, objective)
    # opt is a minimum over all locations, so it cannot exceed either evaluated cost.
    opt = min(opt, mech, advice)
    eta_value = _eta(pts, a_star, opt, a_hat, objective) if opt > 0 else None
    return make_report(Objective.MINIMIZE, mech, opt, advice, eta_value)


def mbb(inst: Points, a_hat, *, optimum=None) -> MechanismOutcome[Point2]:
    """Minimum Bounding Box mechanism, evaluated under the egalitarian cost.

    ``optimum`` may pass a precomputed ``(a_star, opt)`` pair to skip the oracle.
    """
    pts = as_points(inst)
    out = mbb_point(pts, a_hat)
    report = _report(pts, out, a_hat, FacilityObjective.EGALITARIAN, optimum)
    return MechanismOutcome(out, (0.0,) * len(pts), report)


def cmp(inst: Points, a_hat, cfg: CmpConfig = CmpConfig(), *, optimum=None) -> MechanismOutcome[Point2]:
    """Coordinatewise Median with Predictions, evaluated under the utilitarian cost.

    Each coordinate is the median of the agents' reports plus ``floor(lam * n)``
    copies of the recommended coordinate.
    """
    pts = as_points(inst)
    out = cmp_point(pts, a_hat, cfg)
    report = _report(pts, out, a_hat, FacilityObjective.UTILITARIAN, optimum)
    return MechanismOutcome(out, (0.0,) * len(pts), report)


# --- exact baselines ------------------------------------------------------

# Relative slack for point-in-circle tests.
_MEC_EPS = 1e-12


def _circle_two(p, q):
    cx, cy = (p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0
    return (cx, cy, max(math.hypot(cx - p[0], cy - p[1]), math.hypot(cx - q[0], cy - q[1])))


def _circumcircle(p, q, r):
    # Translate to the bounding-box centre for numerical stability.
    ox = (min(p[0], q[0], r[0]) + max(p[0], q[0], r[0])) / 2.0
    oy = (min(p[1], q[1], r[1]) + max(p[1], q[1], r[1])) / 2.0
    ax, ay = p[0] - ox, p[1] - oy
    bx, by = q[0] - ox, q[1] - oy
    cx, cy = r[0] - ox, r[1] - oy
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        return None
    a2, b2, c2 = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
    x = ox + (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    y = oy + (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    rad = max(math.hypot(x - s[0], y - s[1]) for s in (p, q, r))
    return (x, y, rad)


def _inside(c, p) -> bool:
    return c is not None and math.hypot(p[0] - c[0], p[1] - c[1]) <= c[2] * (1 + _MEC_EPS) + _MEC_EPS


def _mec_two_boundary(pts, p, q):
    circ = _circle_two(p, q)
    left = right = None
    px, py = p
    qx, qy = q
    for r in pts:
        if _inside(circ, r):
            continue
        cross = (qx - px) * (r[1] - py) - (qy - py) * (r[0] - px)
        c = _circumcircle(p, q, r)
        if c is None:
            continue
        side = (qx - px) * (c[1] - py) - (qy - py) * (c[0] - px)
        if cross > 0.0 and (left is None or side > (qx - px) * (left[1] - py) - (qy - py) * (left[0] - px)):
            left = c
        elif cross < 0.0 and (right is None or side < (qx - px) * (right[1] - py) - (qy - py) * (right[0] - px)):
            right = c
    if left is None and right is None:
        return circ
    if left is None:
        return right
    if right is None:
        return left
    return left if left[2] <= right[2] else right


def _mec_one_boundary(pts, p):
    c = (p[0], p[1], 0.0)
    for i, q in enumerate(pts):
        if not _inside(c, q):
            if c[2] == 0.0:
                c = _circle_two(p, q)
            else:
                c = _mec_two_boundary(pts[: i + 1], p, q)
    return c


def min_enclosing_circle(inst: Points) -> tuple[float, float, float]:
    """Smallest enclosing circle ``(cx, cy, r)`` by incremental construction.

    Points are processed in input order, so the result is reproducible; the
    worst case is cubic in ``n``.
    """
    pts = [(float(x), float(y)) for x, y in as_points(inst)]
    c = None
    for i, p in enumerate(pts):
        if c is None or not _inside(c, p):
            c = _mec_one_boundary(pts[: i + 1], p)
    return c


def opt_egalitarian(inst: Points) -> tuple[Point2, float]:
    pts = as_points(inst)
    cx, cy, _ = min_enclosing_circle(pts)
    center = Point2(cx, cy)
    return center, egalitarian_cost(pts, center)


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, last: Point2):
        super().__init__(message)
        self.last = last


def _vertex_optimal(uniq: np.ndarray, w: np.ndarray) -> int:
    """Index of a distinct input point satisfying the vertex optimality test, or -1.

    A point p with multiplicity w_p minimises the sum of distances iff the
    resultant of unit vectors from the other points has norm <= w_p.
    """
    best, best_slack = -1, -math.inf
    for i in range(uniq.shape[0]):
        diff = uniq[i] - uniq
        d = np.hypot(diff[:, 0], diff[:, 1])
        d[i] = 1.0
        unit = diff / d[:, None]
        unit[i] = 0.0
        r = np.hypot(*(w[:, None] * unit).sum(axis=0))
        slack = w[i] - r
        if slack >= -1e-12 * w.sum() and slack > best_slack:
            best, best_slack = i, slack
    return best


def _wsum(uniq: np.ndarray, w: np.ndarray, x: np.ndarray) -> float:
    return float((w * np.hypot(uniq[:, 0] - x[0], uniq[:, 1] - x[1])).sum())


def _newton_step(uniq, w, x, diff, d):
    # Weiszfeld crawls when the optimum sits very close to an input point;
    # the distance sum is smooth there, so a Newton step converges quickly.
    u = -diff / d[:, None]
    grad = (w[:, None] * u).sum(axis=0)
    c = w / d
    hess = c.sum() * np.eye(2) - (c[:, None, None] * u[:, :, None] * u[:, None, :]).sum(axis=0)
    try:
        x_nt = x - np.linalg.solve(hess, grad)
    except np.linalg.LinAlgError:
        return None
    return x_nt if np.isfinite(x_nt).all() else None


def opt_utilitarian(
    inst: Points, *, max_iter: int = 100_000, tol: float = 1e-12
) -> tuple[Point2, float]:
    """Geometric median via Weiszfeld iterations.

    Distinct input points are first tested as candidate optima (where the
    Weiszfeld map is undefined and convergence is slow); otherwise the
    iteration starts at the centroid.
    """
    pts = as_points(inst)
    uniq, counts = np.unique(pts, axis=0, return_counts=True)
    w = counts.astype(float)
    if uniq.shape[0] == 1:
        p = Point2(*uniq[0])
        return p, 0.0
    v = _vertex_optimal(uniq, w)
    if v >= 0:
        p = Point2(*uniq[v])
        return p, utilitarian_cost(pts, p)

    x = (w[:, None] * uniq).sum(axis=0) / w.sum()
    for _ in range(max_iter):
        diff = uniq - x
        d = np.hypot(diff[:, 0], diff[:, 1])
        near = d < 1e-12
        if near.any():
            # Sitting on a non-optimal input point: step off along the descent direction.
            others = ~near
            g = -(w[others, None] * diff[others] / d[others, None]).sum(axis=0)
            x = x - 1e-9 * g / np.hypot(*g)
            continue
        inv = w / d
        x_new = (inv[:, None] * uniq).sum(axis=0) / inv.sum()
        x_nt = _newton_step(uniq, w, x, diff, d)
        if x_nt is not None and _wsum(uniq, w, x_nt) < _wsum(uniq, w, x_new):
            x_new = x_nt
        step = math.hypot(*(x_new - x))
        x = x_new
        if step < tol:
            p = Point2(float(x[0]), float(x[1]))
            return p, utilitarian_cost(pts, p)
    raise ConvergenceError(f"Weiszfeld did not converge in {max_iter} iterations", Point2(*x))


def optimal_location(inst: Points, objective: FacilityObjective) -> tuple[Point2, float]:
    if objective is FacilityObjective.EGALITARIAN:
        return opt_egalitarian(inst)
    return opt_utilitarian(inst)


def _eta(pts, a_star, opt, a_hat, objective):
    d = math.hypot(a_star[0] - a_hat[0], a_star[1] - a_hat[1])
    if objective is FacilityObjective.EGALITARIAN:
        return d / opt
    return pts.shape[0] * d / opt


def eta(inst: Points, a_hat, objective: FacilityObjective) -> float:
    """Normalised distance between the recommendation and the optimal location.

    Egalitarian: ``d(a*, a_hat) / Opt``; utilitarian: ``n * d(a*, a_hat) / Opt``.
    """
    pts = as_points(inst)
    a_star, opt = optimal_location(pts, objective)
    if opt <= 0:
        raise DomainError("prediction error is undefined when the optimal cost is 0")
    return _eta(pts, a_star, opt, a_hat, objective)
