"""Schedule shapes: Bezier inversion, boundary rates, monotonicity."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gqwalk import schedules
from gqwalk.spectral import GapProfile

unit_open = st.floats(min_value=0.01, max_value=0.99)
unit_closed = st.floats(min_value=0.0, max_value=1.0)


def dense_bezier_inverse(l0, l1, l2, l3, u):
    """Brute-force inversion of u = x(tau) on a dense grid."""
    tau = np.linspace(0.0, 1.0, 2_000_001)
    x, y = schedules.bezier_xy(l0, l1, l2, l3, tau)
    return float(np.interp(u, x, y))


def test_bezier_endpoints():
    assert schedules.bezier_eval(0.3, 0.7, 0.6, 0.2, 0.0) == pytest.approx(1.0)
    assert schedules.bezier_eval(0.3, 0.7, 0.6, 0.2, 1.0) == pytest.approx(0.0, abs=1e-9)


@given(unit_open, unit_open, unit_open, unit_open,
       st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=40, deadline=None)
def test_bezier_eval_matches_dense_inversion(l0, l1, l2, l3, u):
    got = schedules.bezier_eval(l0, l1, l2, l3, u)
    assert got == pytest.approx(dense_bezier_inverse(l0, l1, l2, l3, u), abs=1e-5)


def test_bezier_x_controls_sorted():
    # swapping the two x-controls must not change the curve
    a = schedules.bezier_xy(0.8, 0.5, 0.2, 0.5, np.linspace(0, 1, 11))
    b = schedules.bezier_xy(0.2, 0.5, 0.8, 0.5, np.linspace(0, 1, 11))
    assert np.allclose(a[0], b[0])
    assert np.allclose(a[1], b[1])


def test_hyperparams_boundary_rates():
    p = schedules.HyperParams(0.5, 0.5, 0.5, 0.5, k_start=1.0, k_end=1.0)
    assert p.gamma_start == pytest.approx(100.0)
    assert p.gamma_end == pytest.approx(1.0)
    p = schedules.HyperParams(0.5, 0.5, 0.5, 0.5, k_start=0.0, k_end=0.0)
    assert p.gamma_start == pytest.approx(1.0)
    assert p.gamma_end == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        schedules.HyperParams(0.0, 0.5, 0.5, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        schedules.HyperParams(0.5, 0.5, 0.5, 0.5, 1.5, 0.5)


@given(unit_open, unit_open, unit_open, unit_open, unit_closed, unit_closed)
@settings(max_examples=40, deadline=None)
def test_gqw_schedule_monotone_and_bounded(l0, l1, l2, l3, k_start, k_end):
    params = schedules.HyperParams(l0, l1, l2, l3, k_start, k_end)
    if params.gamma_start < params.gamma_end:
        with pytest.raises(ValueError):
            schedules.BezierGqwSchedule(params, 5.0)
        return
    sched = schedules.BezierGqwSchedule(params, 5.0)
    ts = np.linspace(0.0, 5.0, 301)
    gam = sched.gamma_many(ts)
    assert np.all(np.diff(gam) <= 1e-12)
    assert gam[0] == pytest.approx(params.gamma_start, rel=1e-6)
    assert gam[-1] == pytest.approx(params.gamma_end, rel=1e-6)


def test_constant_schedule():
    sched = schedules.ConstantSchedule(0.7, 3.0)
    assert np.allclose(sched.gamma_many(np.linspace(0, 3, 7)), 0.7)
    with pytest.raises(ValueError):
        schedules.ConstantSchedule(-1.0, 3.0)


def test_linear_qa_schedule():
    sched = schedules.LinearQASchedule(4.0)
    assert sched.gamma(2.0) == pytest.approx(1.0)
    assert sched.gamma(1.0) == pytest.approx(3.0)
    assert sched.gamma(4.0) == pytest.approx(0.0)
    assert sched.gamma(0.0) == schedules.LINEAR_QA_CAP
    # capped where (1 - u)/u would exceed the cap
    tiny = 4.0 * 1e-9
    assert sched.gamma(tiny) == schedules.LINEAR_QA_CAP


def constant_profile(value, lo=0.0, hi=100.0):
    return GapProfile.from_fit_dict(
        {"degree": 0, "domain": [lo, hi], "coefficients": [value]}
    )


def test_spectral_oracle_uniform_profile_is_linear_sweep():
    profile = constant_profile(8.0)
    sched = schedules.SpectralOracleSchedule(profile, 10.0)
    ts = np.linspace(0.0, 10.0, 21)
    assert np.allclose(sched.s_of_t(ts), ts / 10.0, atol=1e-9)
    assert np.allclose(sched.gamma_many(ts), 2.0, atol=1e-9)


def test_spectral_oracle_quadrature_matches_closed_form():
    # gap profile rising linearly as E on [0, 1]:
    # s(t) = 1 - (1 - t/T)^2 from the exact upper integral
    profile = GapProfile.from_fit_dict(
        {"degree": 1, "domain": [0.0, 1.0], "coefficients": [0.0, 1.0]}
    )
    with pytest.warns(UserWarning, match="clamped"):
        # the fit touches zero at E = 0, which trips the positivity floor
        sched = schedules.SpectralOracleSchedule(profile, 2.0)
    ts = np.linspace(0.0, 2.0, 41)
    expected = 1.0 - (1.0 - ts / 2.0) ** 2
    assert np.allclose(sched.s_of_t(ts), expected, atol=1e-5)
    assert sched.s_of_t(np.array([0.0]))[0] == 0.0
    assert sched.s_of_t(np.array([2.0]))[0] == pytest.approx(1.0)
    # gamma follows the profile at the swept energy, divided by four
    e_of_t = 1.0 - expected
    assert np.allclose(sched.gamma_many(ts), e_of_t / 4.0, atol=1e-4)


def test_spectral_oracle_clamps_nonpositive_fit():
    profile = GapProfile.from_fit_dict(
        {"degree": 1, "domain": [0.0, 1.0], "coefficients": [-0.5, 1.0]}
    )
    with pytest.warns(UserWarning, match="clamped"):
        sched = schedules.SpectralOracleSchedule(profile, 1.0)
    assert np.all(sched.gamma_many(np.linspace(0, 1, 11)) >= 0.0)


def test_gamma_opt_closed_form():
    # 2^-N sum_r C(N, r)/(2r): N=2 gives (2/2 + 1/4)/4 = 0.3125
    assert schedules.gamma_opt_hypercube(2) == pytest.approx(0.3125)
    import math

    n = 5
    expected = sum(math.comb(n, r) / (2 * r) for r in range(1, n + 1)) / 2**n
    assert schedules.gamma_opt_hypercube(n) == pytest.approx(expected)


def test_descriptor_round_trip():
    ts = np.linspace(0.0, 3.0, 31)
    originals = [
        schedules.ConstantSchedule(0.4, 3.0),
        schedules.LinearQASchedule(3.0),
        schedules.BezierGqwSchedule(
            schedules.HyperParams(0.2, 0.8, 0.7, 0.3, 0.9, 0.1), 3.0
        ),
        schedules.SpectralOracleSchedule(constant_profile(4.0), 3.0),
    ]
    for sched in originals:
        clone = schedules.schedule_from_descriptor(sched.descriptor())
        assert np.allclose(clone.gamma_many(ts), sched.gamma_many(ts), atol=1e-9)
    with pytest.raises(ValueError):
        schedules.schedule_from_descriptor({"variant": "nope"})
