"""Makespan minimisation on unrelated machines with a recommended assignment."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import DomainError, MechanismOutcome, Objective, make_report

Assignment = tuple[int, ...]

#: Oracle runs only when n**m is at most this.
BRUTE_FORCE_CAP = 10**6


@dataclass(frozen=True)
class SchedulingInstance:
    """``costs[i, j]`` is the processing time of job ``j`` on machine ``i``."""

    costs: np.ndarray

    def __post_init__(self):
        c = np.array(self.costs, dtype=float)
        if c.ndim != 2 or c.shape[0] < 1:
            raise DomainError(f"expected an (n, m) cost matrix with n >= 1, got shape {c.shape}")
        if np.isnan(c).any() or (c < 0).any():
            raise DomainError("costs must be nonnegative (inf allowed as 'never assign')")
        c.setflags(write=False)
        object.__setattr__(self, "costs", c)

    @property
    def n(self) -> int:
        return self.costs.shape[0]

    @property
    def m(self) -> int:
        return self.costs.shape[1]


@dataclass(frozen=True)
class AsgConfig:
    beta: float = 1.0

    def check(self, n: int) -> None:
        if not (1.0 <= self.beta <= n):
            raise DomainError(f"beta must lie in [1, n={n}], got {self.beta}")


def _costs(inst) -> np.ndarray:
    if isinstance(inst, SchedulingInstance):
        return inst.costs
    return SchedulingInstance(inst).costs


def check_assignment(costs: np.ndarray, a: Sequence[int]) -> Assignment:
    n, m = costs.shape
    a = tuple(int(i) for i in a)
    if len(a) != m:
        raise DomainError(f"assignment has {len(a)} entries for {m} jobs")
    bad = [i for i in a if not 0 <= i < n]
    if bad:
        raise DomainError(f"machine index {bad[0]} out of range [0, {n})")
    return a


def machine_loads(inst, a: Sequence[int]) -> np.ndarray:
    costs = _costs(inst)
    a = check_assignment(costs, a)
    loads = np.zeros(costs.shape[0])
    for j, i in enumerate(a):
        loads[i] += costs[i, j]
    return loads


def makespan(inst, a: Sequence[int]) -> float:
    costs = _costs(inst)
    if costs.shape[1] == 0:
        check_assignment(costs, a)
        return 0.0
    return float(machine_loads(costs, a).max())


def asg_weights(n: int, a_hat: Sequence[int], beta: float) -> np.ndarray:
    """``r[i, j] = 1`` where the recommendation puts job j on machine i, else ``n / beta``."""
    r = np.full((n, len(a_hat)), n / beta)
    r[list(a_hat), list(range(len(a_hat)))] = 1.0
    return r


def _winner(bids: np.ndarray) -> int:
    # np.argmin returns the lowest index among ties.
    finite = np.isfinite(bids)
    if not finite.any():
        raise DomainError("every machine has infinite cost on this job")
    return int(np.argmin(np.where(finite, bids, np.inf)))


def pay_per_job(inst, weights: np.ndarray, j: int) -> tuple[int, float]:
    """Weighted-VCG winner and payment for job ``j``.

    The winner minimises ``weights[i, j] * costs[i, j]`` and is paid the
    smallest competing weighted bid divided by its own weight, the largest
    cost at which it would still have won.  A lone machine is paid its cost.
    """
    return _pay(_costs(inst), np.asarray(weights, dtype=float), j)


def _pay(costs: np.ndarray, weights: np.ndarray, j: int) -> tuple[int, float]:
    wb = weights[:, j] * costs[:, j]
    win = _winner(wb)
    if costs.shape[0] == 1:
        return win, float(costs[win, j])
    rest = np.delete(wb, win)
    return win, float(rest.min() / weights[win, j])


def asg_allocate(inst, a_hat: Sequence[int], beta: float) -> tuple[Assignment, np.ndarray]:
    return _allocate(_costs(inst), a_hat, beta)


def _allocate(costs: np.ndarray, a_hat: Sequence[int], beta: float) -> tuple[Assignment, np.ndarray]:
    n = costs.shape[0]
    a_hat = check_assignment(costs, a_hat)
    AsgConfig(beta).check(n)
    r = asg_weights(n, a_hat, beta)
    wb = r * costs
    return tuple(_winner(wb[:, j]) for j in range(costs.shape[1])), r


PayRule = Callable[[np.ndarray, np.ndarray, int], tuple[int, float]]


def asg_payments(inst, a_hat: Sequence[int], beta: float, pay_rule: Optional[PayRule] = None):
    """Allocation plus per-machine payment totals (summed over the jobs each machine wins)."""
    costs = _costs(inst)
    alloc, r = _allocate(costs, a_hat, beta)
    rule = pay_rule or _pay
    pay = np.zeros(costs.shape[0])
    for j in range(costs.shape[1]):
        win, p = rule(costs, r, j)
        pay[win] += p
    return alloc, pay


def lower_bound(inst) -> float:
    """Makespan lower bound: max(largest job minimum, average of job minima over machines)."""
    costs = _costs(inst)
    if costs.shape[1] == 0:
        return 0.0
    mins = costs.min(axis=0)
    return float(max(mins.max(), mins.sum() / costs.shape[0]))


def asg(inst, a_hat: Sequence[int], cfg: AsgConfig = AsgConfig(), *, oracle: bool = True) -> MechanismOutcome[Assignment]:
    """AllocationScaledGreedy: weighted VCG per job with weights from the recommendation.

    The report uses the exact optimum when ``n**m`` is within the brute-force
    cap (and ``oracle`` is on); otherwise a makespan lower bound stands in and
    the report is flagged ``opt_exact=False``.
    """
    costs = _costs(inst)
    alloc, pay = asg_payments(costs, a_hat, cfg.beta)
    mech = makespan(costs, alloc)
    advice = makespan(costs, a_hat)
    n, m = costs.shape
    if oracle and n**m <= BRUTE_FORCE_CAP:
        _, opt = opt_makespan(costs)
        report = make_report(Objective.MINIMIZE, mech, opt, advice)
    else:
        report = make_report(Objective.MINIMIZE, mech, lower_bound(costs), advice, opt_exact=False)
    return MechanismOutcome(alloc, tuple(float(p) for p in pay), report)


def opt_makespan(inst) -> tuple[Assignment, float]:
    """Minimum makespan by exhaustive search over all ``n**m`` assignments.

    Ties resolve to the lexicographically smallest assignment.  The last jobs
    are enumerated as a vectorised block, earlier jobs as an outer loop.
    """
    costs = _costs(inst)
    n, m = costs.shape
    if n**m > BRUTE_FORCE_CAP:
        raise DomainError(f"brute force over n**m = {n}**{m} exceeds the cap {BRUTE_FORCE_CAP}")
    if m == 0:
        return (), 0.0
    t = m
    while t > 1 and n**t * n > 200_000:
        t -= 1
    head = m - t
    block = np.array(list(itertools.product(range(n), repeat=t)), dtype=np.intp)
    block_loads = np.zeros((block.shape[0], n))
    rows = np.arange(block.shape[0])
    for k in range(t):
        np.add.at(block_loads, (rows, block[:, k]), costs[block[:, k], head + k])

    best_val, best = math.inf, None
    for prefix in itertools.product(range(n), repeat=head):
        base = np.zeros(n)
        for j, i in enumerate(prefix):
            base[i] += costs[i, j]
        spans = (block_loads + base).max(axis=1)
        k = int(np.argmin(spans))
        if spans[k] < best_val or best is None:
            best_val, best = float(spans[k]), prefix + tuple(int(i) for i in block[k])
    return best, best_val


# --- lower-bound instance families ----------------------------------------


def gen_lb_case1(n: int, rho_hat: float, beta: float, eps: float = 1e-6) -> tuple[SchedulingInstance, Assignment]:
    """n machines, n-1 jobs; the recommendation puts job i on machine i.

    Diagonal costs are ``rho_hat``, the last machine costs ``beta*rho_hat/n - eps``
    on every job, everything else is 1.  AllocationScaledGreedy sends every job
    to the last machine.
    """
    if n < 2:
        raise DomainError("requires n >= 2")
    if eps <= 0:
        raise DomainError("requires eps > 0")
    if not 1.0 <= beta <= n:
        raise DomainError(f"beta must lie in [1, n], got {beta}")
    if not 1.0 <= rho_hat <= n / beta + 1e-12:
        raise DomainError(f"case 1 requires 1 <= rho_hat <= n/beta = {n / beta}, got {rho_hat}")
    if beta * rho_hat * (n - 1) / n < 1.0 - 1e-12:
        raise DomainError(
            "case 1 requires beta*rho_hat*(n-1)/n >= 1; below it the optimum "
            "moves every job to the last machine"
        )
    c = np.ones((n, n - 1))
    for i in range(n - 1):
        c[i, i] = rho_hat
    c[n - 1, :] = beta * rho_hat / n - eps
    if (c < 0).any():
        raise DomainError("eps too large: last-machine costs would be negative")
    return SchedulingInstance(c), tuple(range(n - 1))


def lb_case2_k(n: int, rho_hat: float, beta: float) -> int:
    return min(n - 1, math.ceil(beta * rho_hat / n - 1e-9))


def gen_lb_case2(n: int, rho_hat: float, beta: float, eps: float = 1e-6) -> tuple[SchedulingInstance, Assignment]:
    """n machines, n-1+k jobs with ``k = min(n-1, ceil(beta*rho_hat/n))``.

    The recommendation gives job i to machine i (i < n-1) and the trailing k
    jobs to the last machine.  Diagonal costs are ``2*rho_hat``; the last
    machine costs ``1-eps`` on the first n-1 jobs and ``n/beta - eps`` on the
    trailing ones; everything else is 1.
    """
    if n < 2:
        raise DomainError("requires n >= 2")
    if eps <= 0:
        raise DomainError("requires eps > 0")
    if not 1.0 <= beta <= n:
        raise DomainError(f"beta must lie in [1, n], got {beta}")
    if not rho_hat > n / beta:
        raise DomainError(f"case 2 requires rho_hat > n/beta = {n / beta}, got {rho_hat}")
    k = lb_case2_k(n, rho_hat, beta)
    m = n - 1 + k
    c = np.ones((n, m))
    for i in range(n - 1):
        c[i, i] = 2.0 * rho_hat
    c[n - 1, : n - 1] = 1.0 - eps
    c[n - 1, n - 1 :] = n / beta - eps
    if (c < 0).any():
        raise DomainError("eps too large: costs would be negative")
    a_hat = tuple(range(n - 1)) + (n - 1,) * k
    return SchedulingInstance(c), a_hat


def gen_jump_example(n: int, eps: float) -> tuple[SchedulingInstance, SchedulingInstance]:
    """Predicted and actual n x (n-1) all-ones matrices whose last rows are 1+eps and 1-eps."""
    if n < 2:
        raise DomainError("requires n >= 2")
    if not 0 < eps < 1:
        raise DomainError("requires 0 < eps < 1")
    pred = np.ones((n, n - 1))
    act = np.ones((n, n - 1))
    pred[n - 1, :] = 1.0 + eps
    act[n - 1, :] = 1.0 - eps
    return SchedulingInstance(pred), SchedulingInstance(act)
