import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import oracles
from recmech import house
from recmech.core import DomainError
from recmech.house import Normalization, ValuationMatrix


@st.composite
def market(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    vals = draw(hnp.arrays(float, (n, n), elements=st.floats(0, 1)))
    endow = draw(st.permutations(range(n)))
    return vals, tuple(endow)


def test_welfare_examples():
    v = [[1, 0], [0.3, 0.9]]
    assert house.welfare(v, (0, 1)) == pytest.approx(1.9)
    assert house.welfare(v, (1, 0)) == pytest.approx(0.3)
    with pytest.raises(DomainError):
        house.welfare(v, (0, 0))


def test_ttc_two_rounds():
    v = [[3, 2, 1], [3, 1, 2], [1, 3, 2]]
    assert house.ttc_allocate(v, (0, 1, 2)) == (0, 2, 1)


def test_ttc_swap_from_zero_welfare_endowment():
    out = house.ttc([[0, 1], [1, 0]], (0, 1))
    assert out.alternative == (1, 0)
    assert out.report.ratio == 1.0 and math.isinf(out.report.rho_hat)


def test_ttc_ties_pick_lowest_house():
    assert house.ttc_allocate([[1, 1, 0], [1, 1, 0], [0, 0, 1]], (2, 1, 0)) == (0, 1, 2)


@pytest.mark.parametrize(
    "vals,norm",
    [
        ([[0.5, 0.5], [1, 0]], "unit-range"),
        ([[1, 0.2], [1, 0]], "unit-range"),
        ([[0.6, 0.6], [1, 0]], "unit-sum"),
        ([[1, 0, 0], [0, 1, 0]], "none"),
        ([[-0.1, 1.1], [1, 0]], "none"),
    ],
)
def test_invalid_valuations(vals, norm):
    with pytest.raises(DomainError):
        ValuationMatrix(vals, norm)


def test_normalization_tolerance():
    ValuationMatrix([[1 + 5e-10, 0], [0.5 + 1e-10, 0.5]], "none")
    ValuationMatrix([[0.3, 0.7 + 5e-10], [1.0, 0.0]], Normalization.UNIT_SUM)


# --- invariants ----------------------------------------------------------------


@given(market())
def test_ttc_is_individually_rational_and_improves_welfare(mk):
    vals, endow = mk
    out = house.ttc_allocate(vals, endow)
    assert sorted(out) == list(range(len(endow)))
    for i, (h, e) in enumerate(zip(out, endow)):
        assert vals[i, h] >= vals[i, e]
    assert house.welfare(vals, out) >= house.welfare(vals, endow) - 1e-12


@given(market(), st.randoms(use_true_random=False))
def test_ttc_agent_relabelling(mk, rnd):
    vals, endow = mk
    n = len(endow)
    perm = list(range(n))
    rnd.shuffle(perm)
    v2 = np.empty_like(vals)
    e2 = [0] * n
    for i in range(n):
        v2[perm[i]] = vals[i]
        e2[perm[i]] = endow[i]
    out, out2 = house.ttc_allocate(vals, endow), house.ttc_allocate(v2, e2)
    assert all(out2[perm[i]] == out[i] for i in range(n))


@settings(max_examples=200)
@given(market(max_n=5), st.data())
def test_ttc_truthful(mk, data):
    vals, endow = mk
    n = len(endow)
    i = data.draw(st.integers(0, n - 1))
    lie = vals.copy()
    lie[i] = data.draw(hnp.arrays(float, n, elements=st.floats(0, 1)))
    honest = vals[i, house.ttc_allocate(vals, endow)[i]]
    cheat = vals[i, house.ttc_allocate(lie, endow)[i]]
    assert cheat <= honest


@given(market(max_n=6))
def test_matching_equals_bruteforce(mk):
    vals, _ = mk
    _, got = house.opt_matching(vals)
    _, want = oracles.matching_bruteforce(vals)
    assert got == pytest.approx(want, abs=1e-12)
    assert house.brute_force_matching(vals)[1] == pytest.approx(want, abs=1e-12)


@given(market(max_n=6))
def test_report_ratios_at_least_one(mk):
    vals, endow = mk
    rep = house.ttc(vals, endow).report
    assert rep.ratio >= 1 - 1e-12 and rep.rho_hat >= rep.ratio - 1e-12


def test_supplied_optimum_is_clipped_from_below():
    rep = house.ttc([[1, 0], [0, 1]], (0, 1), optimum=0.5).report
    assert rep.opt_value == 2.0 and rep.ratio == 1.0


# --- lower-bound families ---------------------------------------------------------


def test_shifted_endowment():
    assert house.shifted_endowment(4) == (1, 2, 3, 0)


def test_unit_range_parameter_and_ratio():
    v, endow = house.gen_ttc_lb(4, 2.0, "unit-range", eps=1e-6)
    assert v.values[1, 2] == pytest.approx(1 / 3, abs=1e-15)
    rep = house.ttc(v, endow).report
    # agent 0 already owns its top house, so nobody trades
    assert rep.ratio == pytest.approx(rep.rho_hat, abs=1e-12)
    assert rep.rho_hat == pytest.approx(2.0 * (4 - 1e-6) / 4, abs=1e-12)


def test_unit_sum_parameter_and_ratio():
    n, eps = 4, 1e-6
    v, endow = house.gen_ttc_lb(n, 3.0, "unit-sum", eps=eps)
    y = v.values[1, 2]
    assert y == pytest.approx(10 / 48, abs=1e-15)
    assert np.allclose(v.values.sum(axis=1), 1.0, atol=1e-12)
    rep = house.ttc(v, endow).report
    want = (1 / n - eps + (n - 1) * (1 - y)) / (1 / n + eps + (n - 1) * y)
    assert rep.rho_hat == pytest.approx(want, abs=1e-12)
    assert rep.rho_hat == pytest.approx(3.0, abs=1e-4)
    assert rep.ratio == pytest.approx(rep.rho_hat, abs=1e-12)


@pytest.mark.parametrize("norm", ["unit-range", "unit-sum"])
def test_perfect_family_member_gives_ratio_one(norm):
    v, endow = house.gen_ttc_lb(5, 1.0, norm)
    assert house.ttc(v, endow).report.ratio == pytest.approx(1.0, abs=1e-5)


def test_family_rejects_bad_parameters():
    with pytest.raises(DomainError):
        house.gen_ttc_lb(2, 1.5, "unit-range")
    with pytest.raises(DomainError):
        house.gen_ttc_lb(4, 5.0, "unit-range")
    with pytest.raises(DomainError):
        house.gen_ttc_lb(4, 14.0, "unit-sum")
    with pytest.raises(DomainError):
        house.gen_ttc_lb(4, 2.0, "none")
