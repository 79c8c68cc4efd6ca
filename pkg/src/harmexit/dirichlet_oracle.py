"""Radial ODE and spectral oracles on geodesic balls.

All functions here are deterministic.  A radial function f on the ball of
radius R satisfies Delta f = f'' + (A'/A) f'.  Shooting starts at a small
radius ``eps`` with the regular Frobenius data f(eps) = 1,
f'(eps) = lambda eps / n and integrates the first-order system with the
adaptive DOP853 scheme.  Complex lambda is carried as a real system of
four components so that conjugating lambda conjugates the solution
exactly.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, SeriesUnavailable, ShootingError
from .geometry import ModelSpace, density, drift

FROBENIUS_EPS = 1e-6
ODE_RTOL = 1e-10
ODE_ATOL = 1e-14
EIGEN_TOL = 1e-12
SERIES_TERM_TOL = 1e-10
SERIES_MIN_T = 0.01
MAX_MODES = 64


class HypothesisWarning(UserWarning):
    """Re(lambda) <= -rho**2: the ODE is solvable but the exit-time formula may diverge."""


def _drift_coeffs(space: ModelSpace):
    _, m_s, a, m_c, b = space.coefficients
    return m_s * a, a, m_c * b, b


def _make_rhs(space: ModelSpace, lam: complex):
    c1, a, c2, b = _drift_coeffs(space)
    lr, li = float(lam.real), float(lam.imag)
    tanh = math.tanh

    def rhs(r, y):
        d = c1 / tanh(a * r) + c2 * tanh(b * r)
        fr, fi, gr, gi = y
        return [gr, gi, lr * fr - li * fi - d * gr, lr * fi + li * fr - d * gi]

    return rhs


def _shoot(space: ModelSpace, lam: complex, R: float, grid=None, eps: float = FROBENIUS_EPS,
           rtol: float = ODE_RTOL):
    """Integrate from eps to R; return states at ``grid`` (or only at R)."""
    n = space.n
    lam = complex(lam)
    solver = integrate.ode(_make_rhs(space, lam)).set_integrator(
        "dop853", rtol=rtol, atol=ODE_ATOL, nsteps=1_000_000)
    d0 = lam * eps / n
    solver.set_initial_value([1.0, 0.0, d0.real, d0.imag], eps)
    points = [R] if grid is None else list(grid)
    out = np.empty((len(points), 4))
    for i, r in enumerate(points):
        if r <= eps:
            # leading regular behaviour f = 1 + lam (r^2 - eps^2) / (2n)
            f = 1.0 + lam * (r * r - eps * eps) / (2 * n)
            g = lam * r / n
            out[i] = (f.real, f.imag, g.real, g.imag)
            continue
        y = solver.integrate(r)
        if not solver.successful():
            raise ShootingError(f"DOP853 failed at r={r} for lambda={lam} (code {solver.get_return_code()})")
        out[i] = y
    return out


@dataclass
class RadialSolution:
    """Radial solution of f'' + (A'/A) f' = lambda f on [0, R] with f(R) = phi0.

    ``values`` and ``derivatives`` are exact ODE states on ``grid``; between
    nodes the solution is the cubic Hermite interpolant of those states.
    """

    R: float
    lam: complex
    grid: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    boundary_value: complex
    outside_hypothesis: bool = False
    _spline: CubicHermiteSpline | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ShootingError("non-finite radial solution")
        self._spline = CubicHermiteSpline(self.grid, self.values, self.derivatives)

    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 0) or np.any(r_arr > self.R * (1 + 1e-12)):
            raise DomainError("radius outside [0, R]")
        out = self._spline(np.clip(r_arr, 0.0, self.R))
        return out if np.ndim(r) else complex(out)

    @property
    def center_value(self) -> complex:
        return complex(self.values[0])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "re_f", "im_f"])
            for r, v in zip(self.grid, self.values):
                w.writerow([repr(float(r)), repr(float(v.real)), repr(float(v.imag))])


def radial_bvp(space: ModelSpace, R: float, lam: complex, phi0: complex = 1.0, n_grid: int = 401,
               eps: float = FROBENIUS_EPS) -> RadialSolution:
    """Regular radial solution of Delta f = lambda f with f(R) = phi0."""
    if not R > 0:
        raise DomainError("need R > 0")
    lam = complex(lam)
    outside = lam.real <= space.lambda1
    if outside:
        warnings.warn(f"Re(lambda)={lam.real} <= lambda1={space.lambda1}: outside the exit-time regime",
                      HypothesisWarning, stacklevel=2)
    grid = np.linspace(0.0, R, n_grid)
    states = _shoot(space, lam, R, grid, eps)
    f = states[:, 0] + 1j * states[:, 1]
    g = states[:, 2] + 1j * states[:, 3]
    fR = f[-1]
    if abs(fR) < 1e-12 * np.max(np.abs(f)):
        raise ShootingError(f"lambda={lam} is (numerically) a Dirichlet eigenvalue of the ball; f(R)={fR}")
    scale = complex(phi0) / fR
    values, derivs = f * scale, g * scale
    values[-1] = complex(phi0)
    return RadialSolution(float(R), lam, grid, values, derivs, complex(phi0), outside)


def eigen_residual(space: ModelSpace, sol: RadialSolution, h: float = 1e-2, n_points: int = 200) -> float:
    """Max |f'' + (A'/A) f' - lambda f| / max|f| on interior points.

    f is re-integrated at a 5-point stencil around each point and the
    derivatives are taken by fourth-order central differences, so the check
    does not trust the shooting derivative values.
    """
    lo, hi = 2 * h + 1e-3, sol.R - 2 * h
    centers = np.linspace(lo, hi, n_points)
    offsets = np.array([-2, -1, 0, 1, 2]) * h
    pts = (centers[:, None] + offsets[None, :]).ravel()
    order = np.argsort(pts, kind="stable")
    states = _shoot(space, sol.lam, sol.R, pts[order])
    scale = sol.boundary_value / complex(*_shoot(space, sol.lam, sol.R)[0, :2])
    f = np.empty(pts.size, dtype=complex)
    f[order] = (states[:, 0] + 1j * states[:, 1]) * scale
    f = f.reshape(n_points, 5)
    d1 = (f[:, 0] - 8 * f[:, 1] + 8 * f[:, 3] - f[:, 4]) / (12 * h)
    d2 = (-f[:, 0] + 16 * f[:, 1] - 30 * f[:, 2] + 16 * f[:, 3] - f[:, 4]) / (12 * h * h)
    res = d2 + drift(space, centers) * d1 - sol.lam * f[:, 2]
    return float(np.max(np.abs(res)) / np.max(np.abs(sol.values)))


# ------------------------------------------------------------------ spectrum


@dataclass(frozen=True)
class DirichletSpectrum:
    """Dirichlet eigenvalues of the radial Laplacian on a ball.

    ``eigenvalues`` are decreasing; ``mass`` and ``norm2`` hold
    integral f_k A and integral f_k^2 A over [0, R] for the shooting
    eigenfunctions normalized by f_k(0) = 1, so that the survival
    coefficient from radius r0 is f_k(r0) * mass_k / norm2_k.
    """

    R: float
    eigenvalues: tuple[float, ...]
    mass: tuple[float, ...]
    norm2: tuple[float, ...]
    space_key: str

    def to_json(self) -> str:
        return json.dumps({"space": self.space_key, "R": self.R, "eigenvalues": list(self.eigenvalues)})


def _boundary_value(space: ModelSpace, R: float, s: float) -> float:
    return float(_shoot(space, space.lambda1 - s * s, R)[0, 0])


@lru_cache(maxsize=32)
def _eigen_s(space: ModelSpace, R: float, k_max: int) -> tuple[float, ...]:
    # lambda = lambda1 - s^2; consecutive roots are roughly pi/R apart in s
    ds = math.pi / (8.0 * R)
    s_prev, f_prev = 0.0, _boundary_value(space, R, 0.0)
    roots: list[float] = []
    s_cap = (k_max + 4) * math.pi / R * 4.0
    while len(roots) < k_max:
        s = s_prev + ds
        if s > s_cap:
            raise ShootingError(f"found only {len(roots)} of {k_max} eigenvalues below s={s_cap}")
        f = _boundary_value(space, R, s)
        if f == 0.0:
            roots.append(s)
        elif f_prev * f < 0:
            roots.append(optimize.brentq(lambda x: _boundary_value(space, R, x), s_prev, s,
                                         xtol=EIGEN_TOL, rtol=4 * np.finfo(float).eps, maxiter=200))
        s_prev, f_prev = s, f
    return tuple(roots)


def dirichlet_eigenvalues(space: ModelSpace, R: float, k_max: int = 5) -> np.ndarray:
    """First ``k_max`` Dirichlet eigenvalues of radial eigenfunctions, decreasing."""
    if not R > 0:
        raise DomainError("need R > 0")
    if not 1 <= k_max <= MAX_MODES:
        raise DomainError(f"k_max must be in [1, {MAX_MODES}]; higher modes are not resolved by the scan")
    s = np.array(_eigen_s(space, float(R), int(k_max)))
    return space.lambda1 - s * s


def principal_eigenvalue(space: ModelSpace, R: float) -> float:
    return float(dirichlet_eigenvalues(space, R, 1)[0])


@lru_cache(maxsize=32)
def spectrum(space: ModelSpace, R: float, k_max: int = 10) -> DirichletSpectrum:
    """Eigenvalues plus the integrals needed by the survival expansion."""
    lams = dirichlet_eigenvalues(space, R, k_max)
    nodes, weights = np.polynomial.legendre.leggauss(max(200, 24 * k_max))
    r = 0.5 * R * (nodes + 1.0)
    w = 0.5 * R * weights
    A = density(space, r)
    mass, norm2 = [], []
    for lam in lams:
        f = _shoot(space, lam, R, r)[:, 0]
        mass.append(float(np.sum(w * f * A)))
        norm2.append(float(np.sum(w * f * f * A)))
    return DirichletSpectrum(float(R), tuple(float(x) for x in lams), tuple(mass), tuple(norm2), space.key)


def _mode_values(space: ModelSpace, spec: DirichletSpectrum, r0: float) -> np.ndarray:
    return np.array([_shoot(space, lam, spec.R, [r0])[0, 0] for lam in spec.eigenvalues])


def survival_terms(space: ModelSpace, R: float, r0: float, k_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and coefficients c_k(r0) of P(tau >= t) = sum c_k exp(lambda_k t)."""
    spec = spectrum(space, float(R), int(k_max))
    fk = _mode_values(space, spec, r0)
    return np.array(spec.eigenvalues), fk * np.array(spec.mass) / np.array(spec.norm2)


def survival(space: ModelSpace, R: float, r0: float, t: float, min_t: float = SERIES_MIN_T) -> float:
    """P(tau >= t) for Brownian motion started at radius r0 in the ball B(R).

    The eigen-expansion is summed until the magnitude of the first omitted
    block of terms falls below 1e-10.  Below ``min_t`` the series needs too
    many modes and :class:`SeriesUnavailable` is raised.
    """
    if not 0 <= r0 < R:
        raise DomainError("need 0 <= r0 < R")
    if t < 0:
        raise DomainError("need t >= 0")
    if t == 0:
        return 1.0
    if t < min_t:
        raise SeriesUnavailable(f"t={t} below series threshold {min_t}; use Monte Carlo")
    k = 8
    while True:
        lams, coef = survival_terms(space, R, r0, k)
        terms = coef * np.exp(lams * t)
        # the last quarter of the block bounds what was dropped
        if np.max(np.abs(terms[-max(2, k // 4):])) < SERIES_TERM_TOL:
            break
        if 2 * k > MAX_MODES:
            raise SeriesUnavailable(f"series not converged with {k} modes at t={t}")
        k *= 2
    return float(min(max(math.fsum(terms), 0.0), 1.0))


# ---------------------------------------------------------- mean exit time


def mean_exit_time(space: ModelSpace, R: float, r0: float) -> float:
    """E tau from radius r0: integral_{r0}^R A(s)^-1 integral_0^s A(v) dv ds."""
    if not 0 <= r0 <= R:
        raise DomainError("need 0 <= r0 <= R")
    if r0 == R:
        return 0.0

    def inner(s):
        if s <= 0:
            return 0.0
        val, _ = integrate.quad(lambda v: density(space, v), 0.0, s, epsabs=0.0, epsrel=1e-13, limit=200)
        return val / density(space, s)

    val, _ = integrate.quad(inner, r0, R, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val
