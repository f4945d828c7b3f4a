"""Maximal-in-range multi-unit auctions with a recommended allocation."""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from .core import DomainError, MechanismOutcome, Objective, make_report

BundleAllocation = tuple[int, ...]

OPT_CAP = 10**8
# Above this many candidate count vectors the range is searched by DP instead of enumerated.
ENUM_CAP = 2 * 10**6


@dataclass(frozen=True)
class MultiUnitInstance:
    """``curves[i, q]`` is bidder i's value for q identical items, ``q = 0..m``."""

    curves: np.ndarray

    def __post_init__(self):
        c = np.array(self.curves, dtype=float)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise DomainError(f"expected an (n, m+1) curve matrix, got shape {c.shape}")
        if not np.isfinite(c).all():
            raise DomainError("curve values must be finite")
        if (c[:, 0] != 0).any():
            raise DomainError("curves must be normalized: value of 0 items is 0")
        if (np.diff(c, axis=1) < 0).any():
            raise DomainError("curves must be weakly nondecreasing in the item count")
        c.setflags(write=False)
        object.__setattr__(self, "curves", c)

    @property
    def n(self) -> int:
        return self.curves.shape[0]

    @property
    def m(self) -> int:
        return self.curves.shape[1] - 1


def _curves(inst) -> np.ndarray:
    return inst.curves if isinstance(inst, MultiUnitInstance) else MultiUnitInstance(inst).curves


def check_allocation(n: int, m: int, a: Sequence[int]) -> BundleAllocation:
    a = tuple(int(q) for q in a)
    if len(a) != n:
        raise DomainError(f"allocation has {len(a)} entries for {n} bidders")
    if any(q < 0 for q in a):
        raise DomainError("item counts must be nonnegative")
    if sum(a) > m:
        raise DomainError(f"allocation uses {sum(a)} items but only {m} exist")
    return a


def mu_welfare(inst, a: Sequence[int]) -> float:
    c = _curves(inst)
    n, m = c.shape[0], c.shape[1] - 1
    a = check_allocation(n, m, a)
    return float(math.fsum(c[i, q] for i, q in enumerate(a)))


def _tol(x: float) -> float:
    return 1e-12 * max(1.0, abs(x))


# --- the whole-bundle range -----------------------------------------------


@dataclass(frozen=True)
class BundleRange:
    """Items split into n*n bundles: ``big`` bundles of ``size+1`` items, ``small`` of ``size``."""

    n: int
    m: int

    @property
    def size(self) -> int:
        return self.m // (self.n * self.n)

    @property
    def big(self) -> int:
        return self.m % (self.n * self.n)

    @property
    def small(self) -> int:
        # Empty bundles carry nothing, so they are dropped.
        return self.n * self.n - self.big if self.size > 0 else 0

    def bundle_sizes(self) -> list[int]:
        return [self.size + 1] * self.big + [self.size] * (self.n * self.n - self.big)

    def items(self, b: int, c: int) -> int:
        return b * (self.size + 1) + c * self.size

    def enumerable(self) -> bool:
        return math.comb(self.big + self.n, self.n) * math.comb(self.small + self.n, self.n) <= ENUM_CAP

    def vectors(self) -> np.ndarray:
        """All achievable item-count vectors, sorted lexicographically."""
        return _range_vectors(self.n, self.m)


def _bounded_vectors(n: int, total: int) -> np.ndarray:
    out = [v for v in itertools.product(range(total + 1), repeat=n) if sum(v) <= total]
    return np.array(out, dtype=np.int64).reshape(-1, n)


@functools.lru_cache(maxsize=64)
def _range_vectors(n: int, m: int) -> np.ndarray:
    br = BundleRange(n, m)
    if not br.enumerable():
        raise DomainError(f"bundle range for n={n}, m={m} is too large to enumerate")
    big = _bounded_vectors(n, br.big) * (br.size + 1)
    small = _bounded_vectors(n, br.small) * br.size
    allv = (big[:, None, :] + small[None, :, :]).reshape(-1, n)
    vecs = np.unique(allv, axis=0)
    vecs.setflags(write=False)
    return vecs


def _pick(vecs: np.ndarray, w: np.ndarray) -> int:
    """Index of the max-welfare row, lexicographically smallest among near-ties."""
    mx = float(w.max())
    cand = np.flatnonzero(w >= mx - _tol(mx))
    if cand.size == 1:
        return int(cand[0])
    sub = vecs[cand]
    order = np.lexsort(sub.T[::-1])
    return int(cand[order[0]])


def _range_welfare(c: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Per-bidder value matrix (rows: allocations in ``vecs``)."""
    return c[np.arange(c.shape[0]), vecs]


def _dp_best(c: np.ndarray, br: BundleRange) -> tuple[BundleAllocation, float]:
    """Best whole-bundle allocation by DP over bidders and remaining (big, small) bundle counts."""
    n = c.shape[0]
    B, S = br.big, br.small
    g = [None] * (n + 1)
    g[n] = np.zeros((B + 1, S + 1))
    for i in range(n - 1, -1, -1):
        nxt = g[i + 1]
        cur = np.full((B + 1, S + 1), -np.inf)
        for b in range(B + 1):
            for s in range(S + 1):
                val = c[i, br.items(b, s)]
                cand = np.full((B + 1, S + 1), -np.inf)
                cand[b:, s:] = nxt[: B + 1 - b, : S + 1 - s] + val
                np.maximum(cur, cand, out=cur)
        g[i] = cur
    best = float(g[0][B, S])
    alloc = []
    capb, caps = B, S
    for i in range(n):
        target = g[i][capb, caps]
        choice = None
        for b in range(capb + 1):
            for s in range(caps + 1):
                v = c[i, br.items(b, s)] + g[i + 1][capb - b, caps - s]
                if v >= target - _tol(target):
                    key = (br.items(b, s), -v)
                    if choice is None or key < choice[0]:
                        choice = (key, b, s)
        _, b, s = choice
        alloc.append(br.items(b, s))
        capb, caps = capb - b, caps - s
    return tuple(alloc), best


@dataclass(frozen=True)
class AllocationRange:
    """The whole-bundle range for (n, m), optionally extended by extra allocations."""

    n: int
    m: int
    extra: tuple[BundleAllocation, ...] = ()

    def best(self, c: np.ndarray) -> tuple[BundleAllocation, float]:
        br = BundleRange(self.n, self.m)
        if br.enumerable():
            vecs = br.vectors()
            if self.extra:
                vecs = np.vstack([vecs, np.array(self.extra, dtype=np.int64)])
            w = _range_welfare(c, vecs).sum(axis=1)
            k = _pick(vecs, w)
            return tuple(int(q) for q in vecs[k]), float(w[k])
        alloc, val = _dp_best(c, br)
        cands = [(alloc, val)] + [(a, float(c[np.arange(self.n), list(a)].sum())) for a in self.extra]
        return _lex_best(cands)


def _lex_best(cands):
    mx = max(v for _, v in cands)
    return min((a, v) for a, v in cands if v >= mx - _tol(mx))


def vcg_payments_over_range(inst, rng: AllocationRange, chosen: Sequence[int]) -> np.ndarray:
    """Clarke-pivot payments restricted to ``rng``.

    Bidder i pays the best welfare the others could reach over the range
    without it, minus what the others get in ``chosen``.
    """
    c = _curves(inst)
    n = c.shape[0]
    chosen = check_allocation(n, c.shape[1] - 1, chosen)
    vals = c[np.arange(n), list(chosen)]
    total = float(vals.sum())
    br = BundleRange(rng.n, rng.m)
    pay = np.zeros(n)
    if br.enumerable():
        vecs = br.vectors()
        if rng.extra:
            vecs = np.vstack([vecs, np.array(rng.extra, dtype=np.int64)])
        per = _range_welfare(c, vecs)
        tot = per.sum(axis=1)
        others_best = (tot[:, None] - per).max(axis=0)
        pay = others_best - (total - vals)
    else:
        for i in range(n):
            z = c.copy()
            z[i, :] = 0.0
            pay[i] = rng.best(z)[1] - (total - vals[i])
    return np.maximum(pay, 0.0) if n > 1 else np.zeros(n)


def mu_mir_base(inst) -> BundleAllocation:
    """Optimal allocation of the n*n fixed bundles."""
    c = _curves(inst)
    n, m = c.shape[0], c.shape[1] - 1
    return AllocationRange(n, m).best(c)[0]


def mu_opt(inst) -> tuple[BundleAllocation, float]:
    """Exact welfare optimum at item granularity (lexicographically smallest on ties)."""
    c = _curves(inst)
    n, m = c.shape[0], c.shape[1] - 1
    if n * m * m > OPT_CAP:
        raise DomainError(f"n*m^2 = {n * m * m} exceeds the cap {OPT_CAP}")
    # g[i][r]: best welfare for bidders i.. using at most r items.
    g = np.zeros((n + 1, m + 1))
    for i in range(n - 1, -1, -1):
        cur = np.full(m + 1, -np.inf)
        for q in range(m + 1):
            cur[q:] = np.maximum(cur[q:], c[i, q] + g[i + 1, : m + 1 - q])
        g[i] = cur
    alloc, rem = [], m
    for i in range(n):
        target = g[i, rem]
        for q in range(rem + 1):
            if c[i, q] + g[i + 1, rem - q] >= target - _tol(target):
                alloc.append(q)
                rem -= q
                break
    return tuple(alloc), float(g[0, m])


def mir_allocate(inst, a_hat: Sequence[int]) -> tuple[BundleAllocation, AllocationRange]:
    c = _curves(inst)
    n, m = c.shape[0], c.shape[1] - 1
    a_hat = check_allocation(n, m, a_hat)
    rng = AllocationRange(n, m, (a_hat,))
    return rng.best(c)[0], rng


def mir_with_advice(inst, a_hat: Sequence[int], *, oracle: bool = True) -> MechanismOutcome[BundleAllocation]:
    """Best of the base mechanism's output and the recommendation, with VCG payments over the extended range."""
    c = _curves(inst)
    out, rng = mir_allocate(c, a_hat)
    pay = vcg_payments_over_range(c, rng, out)
    mech = mu_welfare(c, out)
    advice = mu_welfare(c, a_hat)
    base = mu_welfare(c, mu_mir_base(c))
    if oracle:
        opt = max(mu_opt(c)[1], mech)
        report = make_report(Objective.MAXIMIZE, mech, opt, advice)
    else:
        report = make_report(Objective.MAXIMIZE, mech, max(mech, advice), advice, opt_exact=False)
    return MechanismOutcome(out, tuple(float(p) for p in pay), report, {"base_welfare": base})


# --- generic wrapper ------------------------------------------------------


class BaseMechanism(Protocol):
    def allocate(self, inst): ...

    def welfare(self, inst, allocation) -> float: ...


@dataclass(frozen=True)
class CallbackMechanism:
    """Adapts two plain callables to :class:`BaseMechanism`."""

    allocate_fn: Callable
    welfare_fn: Callable

    def allocate(self, inst):
        return self.allocate_fn(inst)

    def welfare(self, inst, allocation) -> float:
        return float(self.welfare_fn(inst, allocation))


def with_advice(base: BaseMechanism, inst, a_hat, key: Optional[Callable] = None):
    """Return whichever of the base output and the recommendation has more welfare.

    Ties go to the smaller of the two under ``key`` (default: the allocation itself).
    """
    a_m = base.allocate(inst)
    w_m, w_a = base.welfare(inst, a_m), base.welfare(inst, a_hat)
    if w_m > w_a:
        return a_m
    if w_a > w_m:
        return a_hat
    key = key or (lambda a: tuple(a))
    return min(a_m, a_hat, key=key)
