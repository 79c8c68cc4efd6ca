import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from harmexit.dirichlet_oracle import radial_bvp
from harmexit.eigenfun import (BoundaryData, LowEffectiveSampleSize, boundary_convergence_probe, c_lambda_probe,
                               estimate_from_batch, estimate_psi, exit_batch_for, probe_is_converging,
                               psi_profile)
from harmexit.errors import DomainError, HypothesisViolation, UsageError
from harmexit.geometry import ModelSpace
from harmexit.sde_sim import ExitBatch, SimConfig

H3 = ModelSpace.real_hyperbolic(3)
H2 = ModelSpace.real_hyperbolic(2)
DR = ModelSpace.damek_ricci(1, 1)
ONE = BoundaryData.constant(1.0)


@pytest.fixture(scope="module")
def y10():
    return BoundaryData.spherical_harmonic(1, 0, dim=2)


@pytest.fixture(scope="module")
def walk_batch(y10):
    return exit_batch_for(H3, 1.0, (0.5, (0.0, 0.6, 0.8)), y10, SimConfig(seed=41, n_paths=20_000))


@pytest.mark.parametrize("sp", [H3, H2, DR], ids=lambda s: s.key)
def test_lambda_zero_constant_exact(sp):
    for c in (1.0, -2.5, 3 + 1j):
        e = estimate_psi(sp, 1.0, 0.3, 0.0, BoundaryData.constant(c), 2000, 1)
        assert e.mean == complex(c) and e.stderr == (0.0, 0.0)
        assert e.n_paths == 2000 and e.weight_max == 1.0


def test_hypothesis_refused():
    with pytest.raises(HypothesisViolation, match="lambda1"):
        estimate_psi(H3, 1.0, 0.0, -1.0, ONE, 10, 1)
    with pytest.raises(HypothesisViolation):
        estimate_psi(DR, 1.0, 0.0, -DR.rho ** 2 - 0.01 + 5j, ONE, 10, 1)
    with pytest.raises(HypothesisViolation):
        c_lambda_probe(H3, 1.0, -1.2, [0.0], 10, 1)


def test_non_constant_on_dr_unsupported(y10):
    with pytest.raises(UsageError):
        estimate_psi(DR, 1.0, 0.0, 0.0, y10, 10, 1)


def test_start_outside_ball():
    with pytest.raises(DomainError):
        estimate_psi(H3, 1.0, 1.0, 0.0, ONE, 10, 1)


def test_oracle_agreement_real_and_complex():
    for lam in (-0.5, 0.8, -0.3 + 0.6j, 1.5 - 2.0j):
        e = estimate_psi(H3, 1.0, 0.2, lam, ONE, 60_000, 11)
        e.oracle_value = radial_bvp(H3, 1.0, lam)(0.2)
        assert e.z_score <= 4.0, (lam, e.z_score)
        assert e.stderr[0] >= 0 and e.stderr[1] >= 0


def test_oracle_agreement_h2():
    e = estimate_psi(H2, 1.0, 0.0, -0.2 + 0.2j, ONE, 60_000, 12)
    e.oracle_value = radial_bvp(H2, 1.0, -0.2 + 0.2j).center_value
    assert e.z_score <= 4.0


def test_conjugate_symmetry():
    a = estimate_psi(H3, 1.0, 0.4, -0.5 + 0.3j, ONE, 5000, 2)
    b = estimate_psi(H3, 1.0, 0.4, -0.5 - 0.3j, ONE, 5000, 2)
    assert a.mean == b.mean.conjugate() and a.stderr == b.stderr


def test_monotone_weights():
    assert estimate_psi(H3, 1.0, 0.0, -0.3, ONE, 5000, 3).mean.real >= 1.0
    assert estimate_psi(H3, 1.0, 0.0, 0.3, ONE, 5000, 3).mean.real <= 1.0


def test_determinism():
    a = estimate_psi(H3, 1.0, 0.1, -0.5, ONE, 3000, 9, SimConfig(seed=0, n_paths=1, dt=2e-4))
    b = estimate_psi(H3, 1.0, 0.1, -0.5, ONE, 3000, 9, SimConfig(seed=0, n_paths=1, dt=2e-4))
    assert a == b


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), re=st.floats(-0.9, 2), im=st.floats(-2, 2))
def test_linearity_same_stream(a, b, re, im, walk_batch, y10):
    lam = complex(re, im)
    phi2 = BoundaryData.constant(0.7)
    combo = BoundaryData.combination([(a, y10), (b, phi2)])
    lhs = estimate_from_batch(walk_batch, lam, combo).mean
    rhs = a * estimate_from_batch(walk_batch, lam, y10).mean + b * estimate_from_batch(walk_batch, lam, phi2).mean
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(a) + abs(b))


def test_harmonic_table_accuracy(y10):
    assert y10.sup == 1.0
    rng = np.random.default_rng(5)
    v = rng.normal(size=(5000, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    assert np.max(np.abs(y10(v).real - v[:, 2])) <= 1e-3
    assert y10(np.array([[0.0, 0.0, 1.0]]))[0] == pytest.approx(1.0)
    y21 = BoundaryData.spherical_harmonic(2, 1, dim=2)
    exact = v[:, 0] * v[:, 2]  # proportional to Y_21, sup 1/2
    assert np.max(np.abs(y21(v).real - exact / 0.5)) <= 1e-3


def test_circle_harmonic():
    c2 = BoundaryData.spherical_harmonic(2, 0, dim=1)
    ang = np.linspace(0, 2 * np.pi, 777)
    d = np.column_stack([np.cos(ang), np.sin(ang)])
    assert np.max(np.abs(c2(d).real - np.cos(2 * ang))) <= 1e-3


def test_tabulated_boundary_data():
    tab = BoundaryData.tabulated(np.ones((5, 8)) * 2.0, dim=2)
    dirs = np.array([[1.0, 0, 0], [0, 0, -1.0]])
    assert np.allclose(tab(dirs), 2.0) and tab.sup == 2.0
    with pytest.raises(DomainError):
        BoundaryData.tabulated(np.ones(5), dim=2)


def l1_radial_ratio(r):
    """g(r)/g(1) for g'' + 2 coth r g' - 2 g / sinh^2 r = 0 with g ~ r at the origin."""
    rhs = lambda s, y: [y[1], -2 / math.tanh(s) * y[1] + 2 / math.sinh(s) ** 2 * y[0]]
    sol = solve_ivp(rhs, (1e-6, 1.0), [1e-6, 1.0], rtol=1e-12, atol=1e-14, dense_output=True)
    return sol.sol(r)[0] / sol.sol(1.0)[0]


def test_harmonic_on_h3_is_l1_solution(y10):
    """psi for phi = cos(theta), lambda = 0 is g(r) cos(theta) with g(1) = 1."""
    x = (0.6, (0.0, 0.0, 1.0))
    e = estimate_psi(H3, 1.0, x, 0.0, y10, 60_000, 21)
    e.oracle_value = complex(l1_radial_ratio(0.6))
    assert e.z_score <= 4.0
    # off the pole the same data scales by cos(theta)
    x = (0.6, (0.0, 0.8, 0.6))
    e = estimate_psi(H3, 1.0, x, 0.0, y10, 60_000, 22)
    e.oracle_value = complex(0.6 * l1_radial_ratio(0.6))
    assert e.z_score <= 4.0


def test_neff_warning():
    tau = np.zeros(1000)
    tau[0] = 50.0
    batch = ExitBatch(tau, np.ones(1000), np.ones(1000, dtype=np.int64), np.arange(1000),
                      np.zeros(1000, dtype=np.int8))
    with pytest.warns(LowEffectiveSampleSize):
        e = estimate_from_batch(batch, -0.5, ONE)
    assert e.n_eff < 10 and e.weight_max == pytest.approx(math.exp(25))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        estimate_from_batch(batch, 0.0, ONE)


def test_profile_report():
    rep = psi_profile(H3, 1.0, [0.0, 0.5], -0.5, 20_000, 4)
    assert len(rep.rows) == 2 and not rep.flagged and rep.ok
    assert rep.to_csv_rows()[0][0] == "r"
    flat = psi_profile(H3, 1.0, [0.0, 0.5], 0.0, 100, 4)
    assert all(r.mean == 1.0 for r in flat.rows)
    with pytest.raises(UsageError):
        psi_profile(H3, 1.0, [0.0], -0.5, 10, 1, phi=BoundaryData.spherical_harmonic(1, 0))


def test_boundary_probe_trivial_and_oracle():
    rows = boundary_convergence_probe(H3, 1.0, 0.0, ONE, [0.2, 0.1, 0.05], 500, 1)
    assert all(r.error == 0.0 for r in rows)
    rows = boundary_convergence_probe(H3, 1.0, -0.5, ONE, [0.2, 0.1, 0.05, 0.02], 20_000, 2)
    exact = [abs(radial_bvp(H3, 1.0, -0.5)(1 - d) - 1) for d in (0.2, 0.1, 0.05, 0.02)]
    assert [r.oracle_error for r in rows] == pytest.approx(exact)
    assert exact[0] == pytest.approx(0.02814, abs=1e-5)
    assert probe_is_converging(rows, 1.0)
    with pytest.raises(DomainError):
        boundary_convergence_probe(H3, 1.0, 0.0, ONE, [0.1, 0.2], 10, 1)


def test_c_lambda_probe():
    p = c_lambda_probe(H3, 1.0, -0.5, [0.0, 0.5, 0.9], 20_000, 6)
    assert p.finite and p.sup_estimate.x == 0.0
    assert all(r.z_score <= 4 for r in p.rows)
    q = c_lambda_probe(H3, 1.0, 0.5, [0.0, 0.5], 2000, 6)
    assert all(r.mean.real <= 1.0 for r in q.rows)
    with pytest.raises(DomainError):
        c_lambda_probe(H3, 1.0, -0.5 + 1j, [0.0], 10, 1)


def test_json_fields():
    e = estimate_psi(H3, 1.0, 0.0, -0.5, ONE, 1000, 1)
    e.oracle_value = 1.0826940380377867
    d = e.to_dict({"k": 1})
    for key in ("config", "mean_re", "mean_im", "stderr_re", "stderr_im", "n_paths", "n_eff", "oracle_value",
                "z_score"):
        assert key in d
