import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmexit.errors import CheckFailure, DomainError, UsageError
from harmexit.kernels import (BoundConstants, QuadratureResult, check_heat_bounds, fit_bound_constants,
                              fit_tail_constants, generator_consistency, green_kernel, green_truncation_point,
                              heat_ball_mass, heat_kernel_h3, heat_mass, heat_tail_mass, heat_upper_bound)

mp.mp.dps = 30


def mp_heat_tail(t, R):
    """Closed form of 4 pi int_R^inf h3(t, r) sinh^2 r dr via erfc."""
    t, R = mp.mpf(t), mp.mpf(R)

    def F(a):
        u0 = R - 2 * a * t
        return 2 * t * mp.e ** (-u0 ** 2 / (4 * t)) + 2 * a * t * mp.sqrt(mp.pi * t) * mp.erfc(u0 / (2 * mp.sqrt(t)))

    return (4 * mp.pi * t) ** mp.mpf(-1.5) * 4 * mp.pi * (F(1) - F(-1)) / 2


def test_green_h3_closed_form(h3):
    q = green_kernel(h3, 1.0)
    exact = (1 / math.tanh(1) - 1) / (4 * math.pi)
    assert abs(q.value - exact) < 1e-12
    assert q.abs_error_estimate >= 0 and q.evaluations > 0


def test_green_h3_brute_quadrature(h3):
    for r in (0.3, 2.0, 9.0):
        brute = mp.quad(lambda s: 1 / mp.sinh(s) ** 2, [r, r + 5, mp.inf]) / (4 * mp.pi)
        assert green_kernel(h3, r).value == pytest.approx(float(brute), rel=1e-10)


def test_green_h2(h2):
    exact = math.log(1 / math.tanh(0.5)) / (2 * math.pi)
    assert green_kernel(h2, 1.0).value == pytest.approx(exact, rel=1e-11)
    assert exact == pytest.approx(0.12285756271158, rel=1e-12)


def test_green_dr_brute(dr11):
    brute = mp.quad(lambda s: 1 / (4 * mp.sinh(s / 2) ** 2 * mp.cosh(s / 2)), [1.5, 10, mp.inf]) / (4 * mp.pi)
    assert green_kernel(dr11, 1.5).value == pytest.approx(float(brute), rel=1e-10)


def test_green_monotone_and_positive(h3, dr11):
    for sp in (h3, dr11):
        v = np.array([green_kernel(sp, r).value for r in np.linspace(0.1, 20, 120)])
        assert np.all(v > 0) and np.all(np.diff(v) < 0)


def test_green_truncation_certificate(h3):
    r_star, tail = green_truncation_point(h3, 1.0)
    assert tail < 1e-12 and r_star > 1.0
    exact_tail = (1 / math.tanh(r_star) - 1) / 1.0
    assert exact_tail <= tail


def test_green_domain(h3):
    for r in (0.0, -1.0, float("inf")):
        with pytest.raises(DomainError):
            green_kernel(h3, r)


def test_heat_kernel_values():
    assert heat_kernel_h3(1.0, 0.0) == pytest.approx((4 * math.pi) ** -1.5 * math.exp(-1), rel=1e-15)
    assert heat_kernel_h3(1.0, 0.0) == pytest.approx(0.0082583, abs=5e-8)
    for t in (0.01, 0.7, 12.0):
        assert heat_kernel_h3(t, 0.0) == pytest.approx((4 * math.pi * t) ** -1.5 * math.exp(-t), rel=1e-14)
    with pytest.raises(DomainError):
        heat_kernel_h3(0.0, 1.0)


def _d1(f, x, h):
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def _d2(f, x, h):
    return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (12 * h * h)


def test_heat_pde_residual():
    """d_t h - (d_rr + 2 coth r d_r) h = 0 by fourth-order finite differences."""
    worst = 0.0
    for t in np.linspace(0.5, 2.0, 7):
        for r in np.linspace(0.5, 3.0, 11):
            h0 = heat_kernel_h3(t, r)
            dt = _d1(lambda s: heat_kernel_h3(s, r), t, 1e-3)
            dr = _d1(lambda s: heat_kernel_h3(t, s), r, 1e-2)
            drr = _d2(lambda s: heat_kernel_h3(t, s), r, 1e-2)
            worst = max(worst, abs(dt - drr - 2 / math.tanh(r) * dr) / h0)
    assert worst < 1e-6


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_normalization(t):
    q = heat_mass(t)
    assert isinstance(q, QuadratureResult)
    assert abs(q.value - 1.0) < 1e-8


@pytest.mark.parametrize("t,R", [(1.0, 0.5), (1.0, 10.0), (1.0, 17.0), (0.05, 1.0), (3.0, 25.0)])
def test_tail_mass_closed_form(t, R):
    exact = float(mp_heat_tail(t, R))
    assert heat_tail_mass(t, R).value == pytest.approx(exact, rel=1e-8, abs=1e-15)


def test_tail_mass_examples():
    assert heat_tail_mass(1.0, 0.0).value == pytest.approx(1.0, abs=1e-8)
    logs = [math.log(heat_tail_mass(1.0, R).value) for R in (10.0, 12.0)]
    assert (logs[1] - logs[0]) / 2 <= -1
    seq = [heat_tail_mass(t, 1.0).value / t for t in (0.1, 0.05, 0.025)]
    assert seq[0] > seq[1] > seq[2]


def test_ball_mass_plus_tail():
    for t in (0.5, 1.0, 2.0):
        assert heat_ball_mass(t, 1.5).value + heat_tail_mass(t, 1.5).value == pytest.approx(1.0, abs=1e-12)


def test_fit_tail_constants():
    R_grid = np.linspace(16, 30, 15)
    c = fit_tail_constants(1.0, R_grid)
    assert c.eta > 0 and c.kappa > 0
    for R in R_grid:
        assert heat_tail_mass(1.0, R).value <= c.kappa * math.exp(-c.eta * R)
    with pytest.raises(UsageError):
        fit_tail_constants(1.0, [1.0, 2.0])


def test_upper_bound_examples():
    assert heat_upper_bound(2.0, 0.0, BoundConstants(K=1.0), "large_t") == pytest.approx(math.exp(-2), rel=1e-15)
    assert heat_upper_bound(1.0, 1.0, BoundConstants(C=1.0, D=8.0), "small_t") == \
        pytest.approx(math.exp(-1 - 1 / 8), rel=1e-15)
    with pytest.raises(UsageError):
        heat_upper_bound(0.5, 0.0, BoundConstants(K=1.0), "large_t")
    with pytest.raises(UsageError):
        heat_upper_bound(2.0, 0.0, BoundConstants(K=1.0), "small_t")
    with pytest.raises(UsageError):
        heat_upper_bound(2.0, 0.0, BoundConstants(K=1.0), "medium")


def test_bound_constants_invariants():
    with pytest.raises(DomainError):
        BoundConstants(D=4.0)
    with pytest.raises(DomainError):
        BoundConstants(C=0.0)
    with pytest.raises(DomainError):
        BoundConstants(K=float("inf"))
    b = BoundConstants(C=1.0, D=8.0).merged(BoundConstants(K=2.0))
    assert b.as_dict() == {"C": 1.0, "D": 8.0, "K": 2.0}


def test_fit_degenerate_grid():
    c = fit_bound_constants([1.0], [0.0])
    assert c.K == pytest.approx((4 * math.pi) ** -1.5, rel=1e-11)


def test_fit_and_recheck_full_grid():
    tg, rg = np.geomspace(1e-3, 100, 121), np.linspace(0, 50, 201)
    c = fit_bound_constants(tg, rg)
    assert c.D == 8.0 and math.isfinite(c.C) and math.isfinite(c.K) and c.K <= 1
    rep = check_heat_bounds(c, tg, rg)
    assert rep["small_t_ok"] and rep["large_t_ok"]
    assert rep["small_t_worst"] <= 1 and rep["large_t_worst"] <= 1
    # an undersized constant must be caught by the re-check
    bad = BoundConstants(C=c.C * 0.99, D=8.0, K=c.K * 0.99)
    rep = check_heat_bounds(bad, tg, rg)
    assert not rep["small_t_ok"] and not rep["large_t_ok"]


def test_fit_grid_domain():
    with pytest.raises(DomainError):
        fit_bound_constants([1e-4, 1.0], [0.0])
    with pytest.raises(DomainError):
        fit_bound_constants([1.0], [0.0, 60.0])


def test_fit_detects_unbounded_ratio(monkeypatch):
    import harmexit.kernels as k
    monkeypatch.setattr(k, "log_heat_kernel_h3", lambda t, r: np.full(np.shape(t), np.inf))
    with pytest.raises(CheckFailure):
        k.fit_bound_constants([1.0, 2.0], [0.0, 1.0])


def test_generator_consistency():
    f = lambda r: (1 - r * r) ** 2 if r < 1 else 0.0
    d = generator_consistency(f, [0.1, 0.01, 0.001], 1.0, -4.0)
    assert abs(d[0]) > abs(d[1]) > abs(d[2])
    assert abs(d[2]) < 0.1


def test_generator_constant_and_linearity():
    const = lambda r: 1.0 if r < 3 else 0.0
    assert abs(generator_consistency(const, [1e-3], 3.0, 0.0)[0]) < 1e-6
    f1 = lambda r: (1 - r * r) ** 2 if r < 1 else 0.0
    f2 = lambda r: math.cos(math.pi * r / 2) ** 2 if r < 1 else 0.0
    ts = [0.01, 0.001]
    a = generator_consistency(f1, ts, 1.0, -4.0)
    b = generator_consistency(f2, ts, 1.0, -math.pi ** 2 / 2)
    s = generator_consistency(lambda r: f1(r) + f2(r), ts, 1.0, -4.0 - math.pi ** 2 / 2)
    for x, y, z in zip(a, b, s):
        assert z == pytest.approx(x + y, abs=1e-7)


@settings(max_examples=60, deadline=None)
@given(t=st.floats(0.05, 20.0), r=st.floats(0.0, 30.0))
def test_heat_kernel_positive_and_bounded(t, r):
    h = heat_kernel_h3(t, r)
    assert 0 <= h <= heat_kernel_h3(t, 0.0)


@settings(max_examples=25, deadline=None)
@given(t=st.floats(0.05, 5.0), R=st.floats(0.0, 20.0))
def test_tail_mass_in_unit_interval(t, R):
    v = heat_tail_mass(t, R).value
    assert 0.0 <= v <= 1.0
