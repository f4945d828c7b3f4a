import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from recmech.core import DataError, DomainError, Objective, make_report, rng_for, safe_ratio


def test_minimize_arithmetic():
    r = make_report(Objective.MINIMIZE, 4.0, 2.0, 3.0)
    assert r.ratio == 2.0 and r.rho_hat == 1.5


def test_maximize_tight_house_numbers():
    r = make_report(Objective.MAXIMIZE, 1.3, 3.9, 1.3)
    assert r.ratio == pytest.approx(3.0) and r.rho_hat == pytest.approx(3.0)


def test_all_zero_is_one():
    r = make_report(Objective.MINIMIZE, 0, 0, 0)
    assert r.ratio == 1 and r.rho_hat == 1


@pytest.mark.parametrize("objective", list(Objective))
def test_zero_denominator_positive_numerator_is_inf(objective):
    if objective is Objective.MINIMIZE:
        r = make_report(objective, 1.0, 0.0, 2.0)
    else:
        r = make_report(objective, 0.0, 2.0, 0.0)
    assert math.isinf(r.ratio) and math.isinf(r.rho_hat)
    d = r.to_dict()
    assert d["ratio"] == "inf" and d["rho_hat"] == "inf"


@pytest.mark.parametrize("bad", [-1.0, float("nan")])
def test_negative_or_nan_rejected(bad):
    with pytest.raises(DomainError):
        make_report(Objective.MINIMIZE, bad, 1.0, 1.0)
    with pytest.raises(DomainError):
        make_report(Objective.MINIMIZE, 1.0, 1.0, 1.0, eta=bad)


def test_to_dict_keys_and_null_eta():
    d = make_report(Objective.MINIMIZE, 2.0, 1.0, 1.5).to_dict()
    assert set(d) == {"mech_value", "opt_value", "advice_value", "rho_hat", "ratio", "eta"}
    assert d["eta"] is None


def test_inexact_optimum_is_reported_as_bound():
    d = make_report(Objective.MINIMIZE, 2.0, 1.0, 1.5, opt_exact=False).to_dict()
    assert d["opt_value"] is None and d["ratio"] is None and d["rho_hat"] is None
    assert d["opt_bound"] == 1.0 and d["opt_exact"] is False


pos = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False)


@given(opt=pos, mech_f=st.floats(1, 100), adv_f=st.floats(1, 100), c=st.floats(1e-3, 1e3))
def test_scale_invariance(opt, mech_f, adv_f, c):
    a = make_report(Objective.MINIMIZE, opt * mech_f, opt, opt * adv_f)
    b = make_report(Objective.MINIMIZE, c * opt * mech_f, c * opt, c * opt * adv_f)
    assert a.ratio == pytest.approx(b.ratio, rel=1e-12)
    assert a.rho_hat == pytest.approx(b.rho_hat, rel=1e-12)


@given(opt=pos, f=st.floats(1, 100))
def test_ratios_at_least_one_when_opt_is_optimal(opt, f):
    for obj in Objective:
        worse = opt * f if obj is Objective.MINIMIZE else opt / f
        r = make_report(obj, worse, opt, worse)
        assert r.ratio >= 1 - 1e-12 and r.rho_hat >= 1 - 1e-12


def test_safe_ratio():
    assert safe_ratio(0, 0) == 1 and math.isinf(safe_ratio(1, 0)) and safe_ratio(3, 2) == 1.5


def test_data_error_message_names_file_and_row():
    e = DataError("bad number", "pts.csv", 3)
    assert str(e) == "pts.csv, row 3: bad number" and e.row == 3


def test_rng_determinism_and_range():
    assert rng_for(7, 1).random() == rng_for(7, 1).random()
    assert rng_for(7, 1).random() != rng_for(7, 2).random()
    with pytest.raises(DomainError):
        rng_for(-1)
    rng_for(2**64 - 1)
