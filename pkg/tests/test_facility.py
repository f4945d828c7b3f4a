import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from recmech import facility
from recmech.core import DomainError, rng_for
from recmech.facility import (
    CmpConfig,
    ConvergenceError,
    FacilityInstance,
    FacilityObjective,
    Point2,
    TieBreak,
)

S = 1 / math.sqrt(2)
TRIANGLE = [(0.0, 1.0), (1.0, 0.0), (-S, -S)]
CORNERS = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]

coord = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
point = st.tuples(coord, coord)
point_sets = st.lists(point, min_size=1, max_size=25)


# --- costs -------------------------------------------------------------------

@pytest.mark.parametrize(
    "pts,a,want",
    [
        (TRIANGLE, (0, 0), 1.0),
        ([(3.0, -2.0)], (3.0, -2.0), 0.0),
        ([(0, 0), (2, 0)], (1, 0), 1.0),
    ],
)
def test_egalitarian_cost(pts, a, want):
    assert facility.egalitarian_cost(pts, a) == pytest.approx(want, abs=1e-15)


@pytest.mark.parametrize(
    "pts,a,want",
    [
        (CORNERS, (0, 1), 2 + 2 * math.sqrt(5)),
        (CORNERS, (0, 0), 4 * math.sqrt(2)),
        ([(2.5, 1.0)], (2.5, 1.0), 0.0),
    ],
)
def test_utilitarian_cost(pts, a, want):
    assert facility.utilitarian_cost(pts, a) == pytest.approx(want, abs=1e-12)


def test_instance_validation():
    with pytest.raises(DomainError):
        FacilityInstance(np.zeros((0, 2)))
    with pytest.raises(DomainError):
        FacilityInstance([(0.0, float("inf"))])
    with pytest.raises(DomainError):
        CmpConfig(lam=1.0)


# --- selection rules -----------------------------------------------------------

@pytest.mark.parametrize("xs,a,want", [([1, 3, 5], 4, 4), ([1, 3, 5], 0, 1), ([2], 7, 2)])
def test_minmax_p(xs, a, want):
    assert facility.minmax_p(xs, a) == want


@pytest.mark.parametrize(
    "values,tie,want",
    [([3, 1, 2], TieBreak.LOW, 2), ([4, 1, 3, 2], TieBreak.LOW, 2), ([4, 1, 3, 2], TieBreak.HIGH, 3), ([7], TieBreak.HIGH, 7)],
)
def test_median_returns_an_element(values, tie, want):
    assert facility.median(values, tie) == want


@pytest.mark.parametrize("lam,n,k", [(0.75, 4, 3), (0.3, 10, 3), (0.29, 100, 29), (0.0, 7, 0), (0.99, 500, 495)])
def test_copy_count_is_floor(lam, n, k):
    assert facility.n_copies(lam, n) == k


def test_mbb_examples():
    out = facility.mbb(TRIANGLE, (0.3, 0.3))
    assert out.alternative == Point2(0.3, 0.3)
    assert out.report.ratio == pytest.approx(1 + 0.3 * math.sqrt(2), abs=1e-12)
    assert out.report.ratio == pytest.approx(out.report.rho_hat, abs=1e-12)
    assert facility.mbb([(0, 0), (1, 1)], (2, 0.5)).alternative == Point2(1, 0.5)
    assert out.payments == (0.0, 0.0, 0.0)


def test_cmp_examples():
    out = facility.cmp(CORNERS, (0, 1), CmpConfig(0.75, TieBreak.HIGH))
    assert out.alternative == Point2(0, 1)
    assert out.report.ratio == pytest.approx((math.sqrt(5) + 1) / (2 * math.sqrt(2)), abs=1e-12)

    pts = [(0, 1)] * 3 + [(1, 0)] * 2 + [(-1, 0)]
    out = facility.cmp(pts, (1, 0), CmpConfig(0.0, TieBreak.LOW))
    assert out.alternative == Point2(0, 0)
    assert out.report.mech_value == pytest.approx(6.0)
    assert out.report.opt_value == pytest.approx(3 * math.sqrt(2))
    assert out.report.ratio == pytest.approx(math.sqrt(2), abs=1e-12)

    assert facility.cmp([(5, 5)], (-3, 8)).alternative == Point2(5, 5)


def _padded_median_by_hand(xs, a, copies, tie):
    s = sorted(list(xs) + [a] * copies)
    n = len(s)
    if n % 2:
        return s[n // 2]
    return s[n // 2 - 1] if tie is TieBreak.LOW else s[n // 2]


@pytest.mark.parametrize("m", [3, 10, 100])
def test_worst_sum_padded_median_moves_for_large_lambda(m):
    # With at least three copies of the advice the x-median jumps to the advice,
    # so the output is not the origin for every lambda.
    pts = [(0.0, 1.0)] * m + [(1.0, 0.0)] * (m - 1) + [(-1.0, 0.0)]
    xs = [p[0] for p in pts]
    for lam in (0.0, 0.1, 0.25, 0.5, 0.75, 0.9):
        k = facility.n_copies(lam, 2 * m)
        out = facility.cmp_point(pts, (1.0, 0.0), CmpConfig(lam, TieBreak.LOW))
        assert out.x == _padded_median_by_hand(xs, 1.0, k, TieBreak.LOW)
        assert out.x == (1.0 if k >= 3 else 0.0)
        assert out.y == 0.0


def test_worst_sum_lambda_half_gives_the_advice():
    pts = [(0.0, 1.0)] * 3 + [(1.0, 0.0)] * 2 + [(-1.0, 0.0)]
    out = facility.cmp(pts, (1.0, 0.0), CmpConfig(0.5, TieBreak.LOW))
    assert out.alternative == Point2(1.0, 0.0)
    assert out.report.ratio == pytest.approx(out.report.rho_hat)


# --- exact baselines -------------------------------------------------------------

def test_opt_egalitarian_examples():
    c, r = facility.opt_egalitarian(TRIANGLE)
    assert math.hypot(*c) <= 1e-12 and r == pytest.approx(1.0, abs=1e-12)
    c, r = facility.opt_egalitarian([(0, 0), (2, 0)])
    assert c == pytest.approx((1, 0)) and r == pytest.approx(1.0)
    c, r = facility.opt_egalitarian([(4, 4)])
    assert c == (4, 4) and r == 0


@settings(max_examples=200, deadline=None)
@given(point_sets)
def test_mec_matches_pair_triple_bruteforce(pts):
    _, r = facility.opt_egalitarian(pts)
    want = oracles.mec_bruteforce(pts)[2]
    assert abs(r - want) <= 1e-9 * max(1.0, want)


@settings(max_examples=100, deadline=None)
@given(point_sets)
def test_mec_radius_is_cost_at_centre_and_locally_minimal(pts):
    c, r = facility.opt_egalitarian(pts)
    assert r == facility.egalitarian_cost(pts, c)
    for dx, dy in [(1e-4, 0), (-1e-4, 0), (0, 1e-4), (0, -1e-4)]:
        assert facility.egalitarian_cost(pts, (c.x + dx, c.y + dy)) >= r - 1e-9


def test_mec_duplicates_and_collinear():
    pts = [(0, 0), (1, 0), (2, 0), (1, 0), (0, 0)]
    c, r = facility.opt_egalitarian(pts)
    assert c == pytest.approx((1, 0)) and r == pytest.approx(1.0)


@pytest.mark.parametrize(
    "pts,point,cost",
    [
        ([(0, 0), (1, 0), (5, 0)], (1, 0), 5.0),
        (CORNERS, (0, 0), 4 * math.sqrt(2)),
    ],
)
def test_opt_utilitarian_examples(pts, point, cost):
    p, v = facility.opt_utilitarian(pts)
    assert p == pytest.approx(point, abs=1e-9)
    assert v == pytest.approx(cost, abs=1e-9)


def test_opt_utilitarian_matches_nested_grid():
    pts = [(0, 0), (2, 0), (1, 1)]
    _, v = facility.opt_utilitarian(pts)
    gx, gy, gv = oracles.geometric_median_grid(pts, (0, 0), (2, 1))
    assert abs(v - gv) <= 1e-6


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=2, max_size=12))
def test_opt_utilitarian_not_beaten_by_grid(pts):
    _, v = facility.opt_utilitarian(pts)
    arr = np.array(pts)
    _, _, gv = oracles.geometric_median_grid(arr, arr.min(axis=0), arr.max(axis=0), k=120)
    assert v <= gv + 1e-9


def test_weiszfeld_vertex_case_returns_the_vertex():
    # Half the mass sits on one point, which is then optimal.
    pts = [(0, 1)] * 5 + [(1, 0)] * 4 + [(-1, 0)]
    p, v = facility.opt_utilitarian(pts)
    assert p == (0, 1) and v == pytest.approx(5 * math.sqrt(2))


def test_weiszfeld_reports_last_iterate_on_cap():
    pts = [(0, 0), (3, 0), (0, 4), (5, 5), (1, 7)]
    with pytest.raises(ConvergenceError) as err:
        facility.opt_utilitarian(pts, max_iter=2)
    assert isinstance(err.value.last, Point2)


def test_weiszfeld_optimum_just_off_an_input_point():
    # The optimum lies about 1e-6 from (0.5, 0); plain iterations crawl there.
    pts = [(0.0, 1.0), (0.0, 1e-06), (1.0, 0.0), (0.5, 0.0)]
    p, v = facility.opt_utilitarian(pts)
    assert v <= 2.1180339887634285
    assert v == pytest.approx(oracles.sum_dist(pts, *p), abs=1e-15)
    _, _, gv = oracles.geometric_median_grid(pts, (0, 0), (1, 1), k=200)
    assert v <= gv + 1e-12


def test_weiszfeld_converges_on_near_degenerate_sets():
    for k in range(300):
        rng = rng_for(515, k)
        base = rng.random((int(rng.integers(2, 8)), 2))
        close = base[0] + rng.normal(0, 10.0 ** -rng.integers(4, 9), 2)
        pts = np.vstack([base, close])
        p, v = facility.opt_utilitarian(pts)
        for dx, dy in [(1e-7, 0), (-1e-7, 0), (0, 1e-7), (0, -1e-7)]:
            assert oracles.sum_dist(pts, p.x + dx, p.y + dy) >= v - 1e-12


def test_weiszfeld_steps_off_a_nonoptimal_input_point():
    # The centroid of this set is the input point (1, 1), which is not the median.
    pts = [(0, 0), (3, 0), (0, 3), (1, 1)]
    p, v = facility.opt_utilitarian(pts)
    _, _, gv = oracles.geometric_median_grid(pts, (0, 0), (3, 3))
    assert v <= gv + 1e-9


@pytest.mark.parametrize("objective", list(FacilityObjective))
def test_eta_examples(objective):
    assert facility.eta(CORNERS, (0, 1), objective) == pytest.approx(1 / math.sqrt(2), abs=1e-9)
    a_star, _ = facility.optimal_location(CORNERS, objective)
    assert facility.eta(CORNERS, a_star, objective) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        facility.eta([(1, 1), (1, 1)], (0, 0), objective)


# --- invariants ------------------------------------------------------------------

@given(point_sets, point)
def test_mbb_output_in_box_and_equals_advice_iff_inside(pts, a_hat):
    arr = np.array(pts)
    out = facility.mbb_point(arr, a_hat)
    lo, hi = arr.min(axis=0), arr.max(axis=0)
    assert lo[0] <= out.x <= hi[0] and lo[1] <= out.y <= hi[1]
    inside = lo[0] <= a_hat[0] <= hi[0] and lo[1] <= a_hat[1] <= hi[1]
    assert (out == Point2(*a_hat)) == inside


@given(point_sets, point)
def test_mbb_never_worse_than_advice(pts, a_hat):
    out = facility.mbb_point(pts, a_hat)
    assert facility.egalitarian_cost(pts, out) <= facility.egalitarian_cost(pts, a_hat) + 1e-12


cfgs = st.builds(CmpConfig, st.floats(0, 0.999), st.sampled_from(list(TieBreak)))


@given(point_sets, point, cfgs)
def test_cmp_coordinatewise_monotone(pts, a_hat, cfg):
    arr = np.array(pts)
    out = facility.cmp_point(arr, a_hat, cfg)
    for k in range(2):
        c_out = np.abs(arr[:, k] - out[k]).sum()
        c_adv = np.abs(arr[:, k] - a_hat[k]).sum()
        assert c_out <= c_adv + 1e-9 * max(1.0, c_adv)


@given(point_sets, point, cfgs)
def test_cmp_agent_distance_split(pts, a_hat, cfg):
    out = facility.cmp_point(pts, a_hat, cfg)
    med = facility.coordinatewise_median(pts, cfg.tie_break)
    for z in pts:
        assert math.dist(z, out) <= math.dist(z, a_hat) + math.dist(z, med) + 1e-9


@given(point_sets, point, cfgs, st.randoms(use_true_random=False))
def test_mechanisms_are_anonymous(pts, a_hat, cfg, rnd):
    shuffled = list(pts)
    rnd.shuffle(shuffled)
    assert facility.mbb_point(pts, a_hat) == facility.mbb_point(shuffled, a_hat)
    assert facility.cmp_point(pts, a_hat, cfg) == facility.cmp_point(shuffled, a_hat, cfg)


def test_cmp_bound_on_random_instances(utilitarian_samples):
    bad = []
    lams = [0.0, 0.25, 0.5, 0.75, 0.9, 0.99]
    for k, s in enumerate(utilitarian_samples):
        lam = lams[k % len(lams)]
        cfg = CmpConfig(lam, TieBreak.LOW if k % 2 else TieBreak.HIGH)
        rep = facility.cmp(s.instance, s.advice, cfg, optimum=s.optimum).report
        if rep.opt_value == 0:
            continue
        bound = min(math.sqrt(2) * rep.rho_hat, rep.rho_hat + math.sqrt(2), math.sqrt(2 * lam**2 + 2) / (1 - lam))
        if rep.ratio > bound + 1e-9:
            bad.append((k, lam, rep.ratio, bound))
    assert bad == []


def test_report_eta_absent_when_optimum_is_zero():
    rep = facility.mbb([(1, 1), (1, 1)], (0, 0)).report
    assert rep.eta is None and math.isinf(rep.rho_hat) and rep.ratio == 1.0
