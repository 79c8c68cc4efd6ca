import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from harmexit.errors import DomainError
from harmexit.geometry import (ModelSpace, density, drift, growth_constant, growth_ratio, log_density,
                               space_from_key, volume_ball)

CATALOG = [ModelSpace.real_hyperbolic(n) for n in (2, 3, 4, 7)] + \
          [ModelSpace.damek_ricci(p, q) for p, q in ((1, 1), (2, 1), (1, 3), (4, 2))]


def jacobi_det(n, r):
    """Curvature -1 Jacobi field a'' = a, a(0)=0, a'(0)=1, integrated numerically; det = a^(n-1)."""
    sol = solve_ivp(lambda s, y: [y[1], y[0]], (0, r), [0.0, 1.0], rtol=1e-12, atol=1e-14)
    return sol.y[0, -1] ** (n - 1)


def test_density_values(h3, h2):
    assert density(h3, 0.0) == 0.0
    assert density(h3, 1.0) == pytest.approx(1.3810978455418157, rel=1e-14)
    assert density(h2, 1.0) == pytest.approx(1.1752011936438014, rel=1e-14)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_density_matches_jacobi_ode(n):
    sp = ModelSpace.real_hyperbolic(n)
    for r in np.linspace(0.1, 10, 12):
        assert density(sp, r) == pytest.approx(jacobi_det(n, r), rel=1e-8)


def test_drift_values(h3):
    assert drift(h3, 1.0) == pytest.approx(2 / math.tanh(1.0), rel=1e-15)
    assert abs(drift(h3, 20.0) - 2.0) < 1e-8
    with pytest.raises(DomainError):
        drift(h3, 0.0)


@pytest.mark.parametrize("sp", CATALOG, ids=lambda s: s.key)
def test_drift_is_log_derivative(sp):
    # central difference of log A against the closed-form drift
    for r in (0.3, 1.0, 4.0):
        h = 1e-5
        fd = (log_density(sp, r + h) - log_density(sp, r - h)) / (2 * h)
        assert drift(sp, r) == pytest.approx(fd, rel=1e-8)


def test_rho_values():
    for n in (2, 3, 4, 9):
        sp = ModelSpace.real_hyperbolic(n)
        assert sp.rho == pytest.approx((n - 1) / 2, rel=1e-15)
        assert sp.lambda1 == -sp.rho ** 2
    for p, q in ((1, 1), (2, 3), (5, 1)):
        sp = ModelSpace.damek_ricci(p, q)
        assert sp.rho == pytest.approx(p / 4 + q / 2, rel=1e-15)
        assert sp.n == p + q + 1


@pytest.mark.parametrize("sp", CATALOG, ids=lambda s: s.key)
def test_far_field_drift(sp):
    assert abs(drift(sp, 25.0 / min(sp.coefficients[2], 1.0) / 2) - 2 * sp.rho) < 1e-6 or \
        abs(drift(sp, 50.0) - 2 * sp.rho) < 1e-6


@pytest.mark.parametrize("sp", CATALOG, ids=lambda s: s.key)
def test_radial_invariants_on_grid(sp):
    r = np.linspace(0.01, 30, 3000)
    assert np.all(density(sp, r) > 0)
    d = drift(sp, r)
    # strictly decreasing where double precision resolves it, flat once coth saturates
    near = r <= 12
    assert np.all(np.diff(d[near]) < 0)
    assert np.all(np.diff(d) <= 0)
    assert np.all(d >= 2 * sp.rho)


def test_omega():
    assert ModelSpace.real_hyperbolic(3).omega == pytest.approx(4 * math.pi)
    assert ModelSpace.real_hyperbolic(2).omega == pytest.approx(2 * math.pi)


def test_volume_ball_closed_form(h3):
    exact = 2 * math.pi * (math.sinh(1) * math.cosh(1) - 1)
    assert volume_ball(h3, 1.0) == pytest.approx(exact, abs=1e-10)
    R = 1e-3
    assert volume_ball(h3, R) / (4 / 3 * math.pi * R ** 3) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("pq", [(1, 1), (2, 3)])
def test_volume_ball_trapezoid_oracle(pq):
    sp = ModelSpace.damek_ricci(*pq)
    r = np.linspace(0, 2.0, 1_000_001)
    trap = sp.omega * np.trapezoid(density(sp, r), r)
    assert volume_ball(sp, 2.0) == pytest.approx(trap, rel=1e-10)


def test_growth_constant(h3, h2, dr11):
    b = growth_constant(h3, 1, 30)
    assert 0 < b.inf and b.sup <= 0.25
    assert b.inf == pytest.approx((1 - math.exp(-2)) ** 2 / 4, rel=1e-12)
    assert growth_constant(h2, 1, 30).sup <= 0.5
    g = growth_constant(dr11, 1, 30)
    grid = growth_ratio(dr11, np.linspace(1, 30, 100_000))
    assert g.inf == pytest.approx(grid.min(), rel=1e-6) and g.sup == pytest.approx(grid.max(), rel=1e-6)
    assert 0 < g.inf <= g.sup < math.inf


def test_growth_ratio_high_precision(dr11):
    mp.mp.dps = 30
    for r in (1.0, 7.5, 29.0):
        exact = 4 * mp.sinh(r / 2) ** 2 * mp.cosh(r / 2) * mp.e ** (-1.5 * r)
        assert growth_ratio(dr11, r) == pytest.approx(float(exact), rel=1e-13)


def test_keys():
    assert space_from_key("h3") == ModelSpace.real_hyperbolic(3)
    assert space_from_key("hn:5").n == 5
    assert space_from_key("dr:1:2") == ModelSpace.damek_ricci(1, 2)
    for sp in CATALOG:
        assert space_from_key(sp.key) == sp
    for bad in ("h4x", "dr:0:1", "hn:1", "sphere"):
        with pytest.raises(DomainError):
            space_from_key(bad)


def test_domain_errors(h3):
    with pytest.raises(DomainError):
        density(h3, float("nan"))
    with pytest.raises(DomainError):
        density(h3, -1.0)
    with pytest.raises(DomainError):
        growth_constant(h3, 2.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(2, 12), r=st.floats(1e-3, 300))
def test_hyperbolic_density_log_consistency(n, r):
    sp = ModelSpace.real_hyperbolic(n)
    la = log_density(sp, r)
    if la < 700:
        assert math.log(density(sp, r)) == pytest.approx(la, rel=1e-10, abs=1e-10)
    assert drift(sp, r) >= 2 * sp.rho


@settings(max_examples=200, deadline=None)
@given(p=st.integers(1, 6), q=st.integers(1, 6), r=st.floats(1.0, 200.0))
def test_growth_ratio_bounded(p, q, r):
    sp = ModelSpace.damek_ricci(p, q)
    v = float(growth_ratio(sp, r))
    # A(r) e^{-2 rho r} tends to 2^{p+q} 2^{-(p+q)} 2^{-q} from below
    assert 0 < v <= 2.0 ** -q * (1 + 1e-12)
