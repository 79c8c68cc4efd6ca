"""Monte Carlo estimation of psi(x) = E_x[exp(-lambda tau) phi(B_tau)].

For Re(lambda) above the top of the spectrum, psi solves
Delta psi = lambda psi in the ball with boundary values phi.  The estimator
averages exp(-lambda tau_i) phi(exit_i) over simulated exits.  Constant
boundary data only needs exit times, so it uses the radial sampler; other
boundary data needs exit points and therefore the full walk (H^2, H^3).

The eigen-equation itself is never differentiated numerically: estimates
are compared with the radial ODE oracle, whose residual is checked
separately.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .dirichlet_oracle import radial_bvp
from .errors import DomainError, HypothesisViolation, UsageError
from .geometry import ModelSpace
from .sde_sim import ExitBatch, SimConfig, sample_full_exit, sample_radial_exit

INTERP_BUDGET = 1e-3
NEFF_WARN_FRACTION = 0.01


class LowEffectiveSampleSize(UserWarning):
    pass


# ------------------------------------------------------------ boundary data


def _angles(dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    if dirs.shape[1] == 2:
        return np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2 * np.pi), None
    theta = np.arccos(np.clip(dirs[:, 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2 * np.pi)
    return theta, phi


class SphereTable:
    """Values on a regular angle grid of S^1 or S^2 with (bi)linear interpolation.

    On S^2 the grid is theta in [0, pi] (both poles included) by a periodic
    phi grid; on S^1 it is a periodic angle grid.
    """

    def __init__(self, values: np.ndarray, dim: int):
        self.values = np.asarray(values, dtype=complex)
        self.dim = dim
        if dim == 1 and self.values.ndim != 1:
            raise DomainError("S^1 table must be one-dimensional")
        if dim == 2 and self.values.ndim != 2:
            raise DomainError("S^2 table must be (n_theta, n_phi)")

    def __call__(self, dirs: np.ndarray) -> np.ndarray:
        theta, phi = _angles(dirs)
        v = self.values
        if self.dim == 1:
            m = v.size
            x = theta / (2 * np.pi) * m
            i0 = np.floor(x).astype(int) % m
            w = x - np.floor(x)
            return (1 - w) * v[i0] + w * v[(i0 + 1) % m]
        nt, nphi = v.shape
        x = theta / np.pi * (nt - 1)
        i0 = np.clip(np.floor(x).astype(int), 0, nt - 2)
        wt = x - i0
        y = phi / (2 * np.pi) * nphi
        j0 = np.floor(y).astype(int) % nphi
        wp = y - np.floor(y)
        j1 = (j0 + 1) % nphi
        top = (1 - wp) * v[i0, j0] + wp * v[i0, j1]
        bot = (1 - wp) * v[i0 + 1, j0] + wp * v[i0 + 1, j1]
        return (1 - wt) * top + wt * bot


def _real_harmonic(l: int, m: int, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """Real spherical harmonic of degree l (circle harmonic on S^1), unnormalized."""
    if dim == 1:
        if m >= 0:
            return lambda ang, _=None: np.cos(l * ang)
        return lambda ang, _=None: np.sin(l * ang)
    if abs(m) > l:
        raise DomainError("need |m| <= l")

    def f(theta, phi):
        # lpmv carries the Condon-Shortley phase; drop it so Y_l^m > 0 near the pole for phi = 0
        p = (-1.0) ** m * special.lpmv(abs(m), l, np.cos(theta))
        return p * (np.cos(m * phi) if m >= 0 else np.sin(-m * phi))

    return f


@dataclass(frozen=True)
class BoundaryData:
    """Boundary function phi on the exit sphere.

    Build instances with :meth:`constant`, :meth:`spherical_harmonic`,
    :meth:`tabulated` or :meth:`combination`.
    """

    kind: str
    value: complex = 0.0
    table: SphereTable | None = field(default=None, compare=False)
    parts: tuple = ()
    label: str = ""
    sup: float = 0.0

    @classmethod
    def constant(cls, c: complex = 1.0) -> "BoundaryData":
        return cls("constant", value=complex(c), label=f"constant({complex(c)})", sup=abs(complex(c)))

    @classmethod
    def tabulated(cls, values, dim: int) -> "BoundaryData":
        table = SphereTable(values, dim)
        return cls("tabulated", table=table, label=f"tabulated{table.values.shape}",
                   sup=float(np.max(np.abs(table.values))))

    @classmethod
    def spherical_harmonic(cls, l: int, m: int = 0, dim: int = 2, budget: float = INTERP_BUDGET,
                           start_resolution: int = 16) -> "BoundaryData":
        """Real harmonic Y_lm scaled to sup 1, tabulated on a grid refined to ``budget``.

        With m = 0 the north pole value is +1.  The grid is doubled until the
        interpolation error on a fixed check set is at most budget * sup.
        """
        f = _real_harmonic(l, m, dim)
        rng = np.random.default_rng(20240611)
        if dim == 1:
            check = rng.uniform(0, 2 * np.pi, 4000)
            check_dirs = np.column_stack([np.cos(check), np.sin(check)])
            exact_check = f(check)
            fine = np.linspace(0, 2 * np.pi, 20001)
            sup = float(np.max(np.abs(f(fine))))
        else:
            z = rng.uniform(-1, 1, 4000)
            ph = rng.uniform(0, 2 * np.pi, 4000)
            th = np.arccos(z)
            check_dirs = np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), z])
            exact_check = f(th, ph)
            tt, pp = np.meshgrid(np.linspace(0, np.pi, 1001), np.linspace(0, 2 * np.pi, 1001), indexing="ij")
            sup = float(np.max(np.abs(f(tt, pp))))
        if sup == 0:
            raise DomainError("harmonic vanishes identically")
        res = start_resolution
        while True:
            if dim == 1:
                grid = np.arange(res) * (2 * np.pi / res)
                table = SphereTable(f(grid) / sup, 1)
            else:
                th_g = np.linspace(0, np.pi, res + 1)
                ph_g = np.arange(2 * res) * (np.pi / res)
                T, P = np.meshgrid(th_g, ph_g, indexing="ij")
                table = SphereTable(f(T, P) / sup, 2)
            err = float(np.max(np.abs(table(check_dirs) - exact_check / sup)))
            if err <= budget:
                break
            if res > 4096:
                raise DomainError("interpolation budget not met")
            res *= 2
        return cls("spherical_harmonic", table=table, label=f"Y({l},{m}) on S^{dim} res={res}", sup=1.0)

    @classmethod
    def combination(cls, terms: Sequence[tuple[complex, "BoundaryData"]]) -> "BoundaryData":
        terms = tuple((complex(c), p) for c, p in terms)
        if all(p.is_constant for _, p in terms):
            return cls.constant(sum(c * p.value for c, p in terms))
        sup = sum(abs(c) * p.sup for c, p in terms)
        return cls("combination", parts=terms, label="+".join(f"{c}*{p.label}" for c, p in terms), sup=sup)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def __call__(self, dirs: np.ndarray | None, count: int | None = None) -> np.ndarray:
        if self.is_constant:
            n = count if dirs is None else len(dirs)
            return np.full(n, self.value)
        if dirs is None:
            raise UsageError("non-constant boundary data needs exit points")
        if self.kind == "combination":
            out = np.zeros(len(dirs), dtype=complex)
            for c, p in self.parts:
                out = out + c * p(dirs)
            return out
        return self.table(dirs)


# --------------------------------------------------------------- estimates


@dataclass
class EigenEstimate:
    x: float | tuple
    lam: complex
    mean: complex
    stderr: tuple[float, float]
    n_paths: int
    weight_max: float
    n_eff: float
    oracle_value: complex | None = None

    @property
    def z_score(self) -> float | None:
        """Largest componentwise |estimate - oracle| / stderr."""
        if self.oracle_value is None:
            return None
        zs = []
        for d, s in ((self.mean.real - self.oracle_value.real, self.stderr[0]),
                     (self.mean.imag - self.oracle_value.imag, self.stderr[1])):
            if s > 0:
                zs.append(abs(d) / s)
            else:
                zs.append(0.0 if abs(d) <= 1e-14 * max(1.0, abs(self.oracle_value)) else math.inf)
        return max(zs)

    def agrees(self, k: float = 3.0) -> bool:
        z = self.z_score
        return z is not None and z <= k

    def to_dict(self, config: dict | None = None) -> dict:
        d = {
            "config": config or {},
            "x": self.x if not isinstance(self.x, tuple) else [self.x[0], list(self.x[1])],
            "lambda_re": self.lam.real,
            "lambda_im": self.lam.imag,
            "mean_re": self.mean.real,
            "mean_im": self.mean.imag,
            "stderr_re": self.stderr[0],
            "stderr_im": self.stderr[1],
            "n_paths": self.n_paths,
            "n_eff": self.n_eff,
            "weight_max": self.weight_max,
        }
        if self.oracle_value is not None:
            d["oracle_value"] = [self.oracle_value.real, self.oracle_value.imag]
            d["z_score"] = self.z_score
        return d


def _mean_and_se(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    if np.all(x == x[0]):
        return float(x[0]), 0.0
    mean = math.fsum(x) / n
    if n < 2:
        return mean, 0.0
    dev = x - mean
    return mean, math.sqrt(math.fsum(dev * dev) / (n - 1) / n)


def check_lambda(space: ModelSpace, lam: complex) -> complex:
    lam = complex(lam)
    if not lam.real > space.lambda1:
        raise HypothesisViolation(
            f"Re(lambda)={lam.real:g} must exceed lambda1=-rho^2={space.lambda1:g} (Re lambda > lambda1); "
            "the weighted exit measure may have infinite mass")
    return lam


def estimate_from_batch(batch: ExitBatch, lam: complex, phi: BoundaryData, x=None) -> EigenEstimate:
    """Weighted average over an existing sample stream.

    Linear in ``phi`` and conjugation-equivariant in ``lam`` for a fixed batch.
    """
    lam = complex(lam)
    if not np.all(batch.exited):
        raise UsageError("batch contains censored paths")
    if lam == 0:
        w = np.ones(len(batch))
    elif lam.imag == 0:
        w = np.exp(-lam.real * batch.tau)
    else:
        w = np.exp(-lam * batch.tau)
    vals = w * phi(batch.exit_dir, len(batch))
    re, se_re = _mean_and_se(np.ascontiguousarray(np.real(vals), dtype=float))
    im, se_im = _mean_and_se(np.ascontiguousarray(np.imag(vals), dtype=float))
    aw = np.abs(w)
    n_eff = math.fsum(aw) ** 2 / math.fsum(aw * aw)
    if n_eff < NEFF_WARN_FRACTION * len(batch):
        warnings.warn(f"effective sample size {n_eff:.0f} below {NEFF_WARN_FRACTION:.0%} of N={len(batch)}",
                      LowEffectiveSampleSize, stacklevel=2)
    return EigenEstimate(x, lam, complex(re, im), (se_re, se_im), len(batch), float(aw.max()), n_eff)


@lru_cache(maxsize=6)
def _radial_batch(space, R, r0, config):
    b = sample_radial_exit(space, R, r0, config)
    for a in (b.tau, b.exit_radius, b.steps, b.status):
        a.flags.writeable = False
    return b


@lru_cache(maxsize=6)
def _walk_batch(space, R, start, config, steps):
    b = sample_full_exit(space, R, (start[0], np.array(start[1])), config, steps=steps)
    for a in (b.tau, b.exit_radius, b.steps, b.status, b.exit_dir):
        a.flags.writeable = False
    return b


def exit_batch_for(space: ModelSpace, R: float, x, phi: BoundaryData, config: SimConfig,
                   walk_steps: str = "gaussian") -> ExitBatch:
    """Sample stream used by :func:`estimate_psi` (memoized per configuration)."""
    if isinstance(x, tuple):
        radius, direction = float(x[0]), tuple(float(v) for v in x[1])
    else:
        radius, direction = float(x), None
    if not 0 <= radius < R:
        raise DomainError("x must lie inside the ball")
    if phi.is_constant:
        return _radial_batch(space, float(R), radius, config)
    if not space.has_full_walk:
        raise UsageError(f"non-constant boundary data needs the full walk, unavailable on {space.key}")
    if direction is None:
        direction = tuple(np.eye(space.n)[-1])
    return _walk_batch(space, float(R), (radius, direction), config, walk_steps)


def estimate_psi(space: ModelSpace, R: float, x, lam: complex, phi: BoundaryData, n_paths: int,
                 seed: int, config: SimConfig | None = None, walk_steps: str = "gaussian") -> EigenEstimate:
    """Monte Carlo estimate of psi(x) with per-component standard errors.

    ``x`` is a radius or a pair (radius, direction).  ``config`` supplies
    discretization settings; its seed and path count are replaced by
    ``seed`` and ``n_paths``.
    """
    lam = check_lambda(space, lam)
    base = config or SimConfig(seed=seed, n_paths=n_paths)
    cfg = base.with_(seed=int(seed), n_paths=int(n_paths))
    batch = exit_batch_for(space, R, x, phi, cfg, walk_steps)
    return estimate_from_batch(batch, lam, phi, x)


def radial_oracle(space: ModelSpace, R: float, lam: complex, c: complex = 1.0):
    return radial_bvp(space, R, lam, c)


@dataclass
class ProfileReport:
    rows: list[EigenEstimate]
    flagged: list[float]

    @property
    def ok(self) -> bool:
        return not self.flagged and all(r.agrees(3.0) for r in self.rows)

    def to_csv_rows(self) -> list[list]:
        out = [["r", "mean_re", "mean_im", "stderr_re", "stderr_im", "oracle_re", "oracle_im", "z_score"]]
        for e in self.rows:
            out.append([e.x, e.mean.real, e.mean.imag, e.stderr[0], e.stderr[1],
                        e.oracle_value.real, e.oracle_value.imag, e.z_score])
        return out


def psi_profile(space: ModelSpace, R: float, radii: Sequence[float], lam: complex, n_paths: int, seed: int,
                phi: BoundaryData | None = None, config: SimConfig | None = None) -> ProfileReport:
    """Estimates at several radii against the radial ODE solution (constant phi)."""
    phi = phi or BoundaryData.constant(1.0)
    if not phi.is_constant:
        raise UsageError("profiles compare against the radial oracle and need constant boundary data")
    lam = check_lambda(space, lam)
    sol = radial_bvp(space, R, lam, phi.value)
    rows, flagged = [], []
    for r in radii:
        est = estimate_psi(space, R, float(r), lam, phi, n_paths, seed, config)
        est.oracle_value = complex(sol(float(r)))
        if est.z_score > 4.0:
            flagged.append(float(r))
        rows.append(est)
    return ProfileReport(rows, flagged)


@dataclass
class ProbeRow:
    delta: float
    estimate: EigenEstimate
    target: complex
    error: float
    error_se: float
    oracle_error: float | None


def boundary_convergence_probe(space: ModelSpace, R: float, lam: complex, phi: BoundaryData,
                               deltas: Sequence[float], n_paths: int, seed: int,
                               config: SimConfig | None = None) -> list[ProbeRow]:
    """|psi(x_delta) - phi(z)| for x_delta at distance delta inside from z.

    z is the north pole of the sphere (last coordinate axis).  For constant
    data the exact error from the radial oracle is reported too.
    """
    lam = check_lambda(space, lam)
    deltas = list(deltas)
    if any(d <= 0 or d >= R for d in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise DomainError("deltas must be decreasing and inside (0, R)")
    pole = np.eye(space.n)[-1]
    target = complex(phi(pole[None, :], 1)[0])
    sol = radial_bvp(space, R, lam, phi.value) if phi.is_constant else None
    rows = []
    for d in deltas:
        x = (R - d, tuple(pole))
        est = estimate_psi(space, R, x if not phi.is_constant else R - d, lam, phi, n_paths, seed, config)
        diff = est.mean - target
        err = abs(diff)
        se = math.hypot(est.stderr[0], est.stderr[1])
        oracle_err = abs(complex(sol(R - d)) - target) if sol is not None else None
        rows.append(ProbeRow(d, est, target, err, se, oracle_err))
    return rows


def probe_is_converging(rows: Sequence[ProbeRow], sup: float, final_fraction: float = 0.02,
                        k: float = 3.0) -> bool:
    """Errors non-increasing up to k combined standard errors; final error < final_fraction * sup."""
    for a, b in zip(rows, rows[1:]):
        if b.error > a.error + k * math.hypot(a.error_se, b.error_se):
            return False
    return rows[-1].error < final_fraction * sup


@dataclass
class CLambdaProbe:
    lam: float
    sup_estimate: EigenEstimate
    rows: list[EigenEstimate]

    @property
    def finite(self) -> bool:
        return math.isfinite(self.sup_estimate.mean.real)


def c_lambda_probe(space: ModelSpace, R: float, lam: float, radii: Sequence[float], n_paths: int, seed: int,
                   config: SimConfig | None = None) -> CLambdaProbe:
    """sup over radii of the estimated E_x[exp(-lambda tau)], each checked against the oracle."""
    if isinstance(lam, complex) and lam.imag != 0:
        raise DomainError("the C_lambda probe takes real lambda")
    lam = float(complex(lam).real)
    check_lambda(space, lam)
    one = BoundaryData.constant(1.0)
    sol = radial_bvp(space, R, lam, 1.0)
    rows = []
    for r in radii:
        est = estimate_psi(space, R, float(r), lam, one, n_paths, seed, config)
        est.oracle_value = complex(sol(float(r)))
        rows.append(est)
    best = max(rows, key=lambda e: e.mean.real)
    return CLambdaProbe(lam, best, rows)
