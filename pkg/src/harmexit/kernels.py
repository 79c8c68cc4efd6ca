"""Deterministic heat and Green kernel computations.

The heat kernel of H^3 (curvature -1, generator the full Laplacian) is

    h_t(r) = (4 pi t)^(-3/2) * (r / sinh r) * exp(-t - r^2 / (4 t)),

which serves as the closed-form kernel for all heat-kernel checks.  The
Green kernel is evaluated for any catalog space from the density alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

from .errors import CheckFailure, DomainError, UsageError
from .geometry import ModelSpace, growth_constant, log_density

GREEN_TAIL_TOL = 1e-12
H3 = ModelSpace.real_hyperbolic(3)
# relative headroom added to fitted constants so the strict re-check survives rounding
FIT_HEADROOM = 1e-12


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise CheckFailure(f"non-finite quadrature value {self.value}")
        if self.abs_error_estimate < 0:
            raise CheckFailure("negative error estimate")

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class BoundConstants:
    """Constants of the heat-kernel and exit-time inequalities.

    Any field may be left unset; set fields must be strictly positive and
    ``D`` must exceed 4.
    """

    C: float | None = None
    D: float | None = None
    K: float | None = None
    kappa: float | None = None
    eta: float | None = None
    alpha: float | None = None
    beta: float | None = None
    gamma: float | None = None
    beta_prime: float | None = None
    C_lambda: float | None = None

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{f.name} must be finite and > 0, got {v}")
        if self.D is not None and self.D <= 4:
            raise DomainError(f"D must exceed 4, got {self.D}")

    def merged(self, other: "BoundConstants") -> "BoundConstants":
        updates = {f.name: getattr(other, f.name) for f in fields(other) if getattr(other, f.name) is not None}
        return replace(self, **updates)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}


def _require_h3(space: ModelSpace):
    if space.family != "real_hyperbolic" or space.n != 3:
        raise UsageError("closed-form heat kernel is only available on H^3")


# ---------------------------------------------------------------- Green kernel


@lru_cache(maxsize=64)
def _envelope_inf(space: ModelSpace, r_start: float) -> float:
    return growth_constant(space, r_start, r_start + 200.0 / space.rho).inf


def green_truncation_point(space: ModelSpace, r: float, tol: float = GREEN_TAIL_TOL) -> tuple[float, float]:
    """Cut-off R* and the certified bound on the discarded tail.

    On [r0, inf) with r0 = max(r, 1) we have 1/A(s) <= exp(-2 rho s)/c with
    c the growth infimum, so the tail beyond R* is at most
    exp(-2 rho R*) / (2 rho c).  The tolerance is absolute and also
    relative to the envelope at r0, so far-field values keep full precision.
    """
    r0 = max(float(r), 1.0)
    c = _envelope_inf(space, r0)
    two_rho = 2.0 * space.rho
    tol = tol * min(1.0, math.exp(-two_rho * r0) / (two_rho * c))
    r_star = max(r0, math.log(1.0 / (two_rho * c * tol)) / two_rho)
    return r_star, math.exp(-two_rho * r_star) / (two_rho * c)


def green_kernel(space: ModelSpace, r: float) -> QuadratureResult:
    """Green kernel G(r) = (1/omega) * integral_r^inf ds / A(s)."""
    r = float(r)
    if not math.isfinite(r) or r <= 0:
        raise DomainError("Green kernel is singular on the diagonal; need r > 0")
    r_star, tail = green_truncation_point(space, r)
    if r_star <= r:
        val, err, neval = 0.0, 0.0, 0
    else:
        val, err, info = integrate.quad(lambda s: math.exp(-log_density(space, s)), r, r_star,
                                        epsabs=0.0, epsrel=1e-12, limit=500, full_output=True)[:3]
        neval = info["neval"]
    return QuadratureResult(val / space.omega, (err + tail) / space.omega, neval)


# ----------------------------------------------------------- H^3 heat kernel


def log_heat_kernel_h3(t, r):
    t = np.asarray(t, dtype=float)
    r = np.abs(np.asarray(r, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.where(r > 1e-8, np.log(r) - (r + np.log1p(-np.exp(-2 * r)) - math.log(2.0)), -r * r / 6.0)
    return -1.5 * np.log(4 * np.pi * t) + log_ratio - t - r * r / (4 * t)


def heat_kernel_h3(t, r):
    """Heat kernel of H^3 at time t and geodesic distance r."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t_arr)) or np.any(t_arr <= 0):
        raise DomainError("heat kernel needs t > 0")
    if np.any(np.asarray(r, dtype=float) < 0):
        raise DomainError("distance must be >= 0")
    out = np.exp(log_heat_kernel_h3(t, r))
    return out if (np.ndim(t) or np.ndim(r)) else float(out)


def _log_mass_integrand(t: float, r: float) -> float:
    # log of omega * h_t(r) * sinh(r)^2 = log of (4 pi t)^{-3/2} 4 pi r sinh r e^{-t - r^2/4t}
    if r <= 0:
        return -math.inf
    log_sinh = r + math.log1p(-math.exp(-2 * r)) - math.log(2.0)
    return -1.5 * math.log(4 * math.pi * t) + math.log(4 * math.pi) + math.log(r) + log_sinh - t - r * r / (4 * t)


def _gaussian_reach(t: float) -> float:
    # the mass integrand is ~ r exp(t - (r - 2t)^2 / 4t); beyond this it is below e^-400
    return 2.0 * t + 40.0 * math.sqrt(t) + 1.0


def heat_mass(t: float, r_lo: float = 0.0, r_hi: float = math.inf, space: ModelSpace = H3) -> QuadratureResult:
    """Heat mass omega * integral_{r_lo}^{r_hi} h_t(r) A(r) dr on H^3."""
    _require_h3(space)
    if not (t > 0 and math.isfinite(t)):
        raise DomainError("need t > 0")
    if r_lo < 0 or r_hi < r_lo:
        raise DomainError("need 0 <= r_lo <= r_hi")
    reach = _gaussian_reach(t)
    hi = min(r_hi, max(reach, r_lo + 40.0 * math.sqrt(t)))
    if hi <= r_lo:
        return QuadratureResult(0.0, 0.0, 0)
    peak = min(max(2.0 * t, math.sqrt(2.0 * t), r_lo), hi)
    shift = _log_mass_integrand(t, max(peak, r_lo, 1e-300))
    pts = [p for p in (peak, peak + math.sqrt(t), peak + 4 * math.sqrt(t)) if r_lo < p < hi]
    val, err, info = integrate.quad(lambda r: math.exp(_log_mass_integrand(t, r) - shift), r_lo, hi,
                                    epsabs=0.0, epsrel=1e-12, limit=500, points=pts or None,
                                    full_output=True)[:3]
    scale = math.exp(shift)
    trunc = 0.0 if hi >= r_hi else _tail_envelope(t, hi)
    return QuadratureResult(val * scale, err * scale + trunc, info["neval"])


def _tail_envelope(t: float, r: float) -> float:
    # closed-form bound of omega * int_r^inf h_t A dr dropping the e^{-r} half of sinh
    a = 2.0 * t
    u = (r - a) / (2.0 * math.sqrt(t))
    inner = 2.0 * t * math.exp(-u * u) + a * math.sqrt(math.pi * t) * math.erfc(u)
    return 2.0 * math.pi * (4.0 * math.pi * t) ** -1.5 * inner


def heat_tail_mass(t: float, R: float, space: ModelSpace = H3) -> QuadratureResult:
    """Heat mass outside the geodesic ball of radius R."""
    if R < 0:
        raise DomainError("need R >= 0")
    res = heat_mass(t, float(R), math.inf, space)
    return QuadratureResult(min(max(res.value, 0.0), 1.0), res.abs_error_estimate, res.evaluations)


def heat_ball_mass(t: float, R: float, space: ModelSpace = H3) -> QuadratureResult:
    """Heat mass inside the geodesic ball of radius R (at most 1)."""
    return heat_mass(t, 0.0, float(R), space)


def fit_tail_constants(t: float, R_grid: Sequence[float], D: float = 8.0, space: ModelSpace = H3) -> BoundConstants:
    """Fit (kappa, eta) with tail(t, R) <= kappa exp(-eta R) on the grid.

    Only radii with R >= 2 D rho t are used.  eta is the smallest secant
    decay rate of log tail between neighbouring grid radii; kappa is then
    the smallest prefactor dominating every grid point.
    """
    R = np.array(sorted(x for x in R_grid if x >= 2.0 * D * space.rho * t), dtype=float)
    if R.size < 2:
        raise UsageError("need at least two radii with R >= 2 D rho t")
    log_tail = np.array([math.log(heat_tail_mass(t, x, space).value) for x in R])
    rates = -np.diff(log_tail) / np.diff(R)
    eta = float(rates.min())
    if not eta > 0:
        raise CheckFailure(f"tail mass is not decaying at t={t}: rate {eta}")
    kappa = float(np.exp(np.max(log_tail + eta * R))) * (1 + FIT_HEADROOM)
    return BoundConstants(kappa=kappa, eta=eta, D=D)


# ------------------------------------------------------------- heat bounds


def heat_upper_bound(t, r, consts: BoundConstants, regime: str, space: ModelSpace = H3):
    """Right-hand side of the small-time or large-time heat kernel bound.

    ``small_t``: C / min(1, t^(n/2)) * exp(lambda1 t - r^2 / (D t)).
    ``large_t``: K (1 + r^2/t)^(1 + 1/n) * exp(lambda1 t - r^2 / (4 t)), t >= 1.
    """
    t_arr = np.asarray(t, dtype=float)
    r_arr = np.asarray(r, dtype=float)
    if np.any(t_arr <= 0):
        raise DomainError("need t > 0")
    n, lam1 = space.n, space.lambda1
    if regime == "small_t":
        if consts.C is None or consts.D is None:
            raise UsageError("small_t regime needs C and D")
        out = consts.C / np.minimum(1.0, t_arr ** (n / 2)) * np.exp(lam1 * t_arr - r_arr**2 / (consts.D * t_arr))
    elif regime == "large_t":
        if consts.K is None:
            raise UsageError("large_t regime needs K")
        # the bound is stated for t > 1; t = 1 is admitted as its continuous closure
        if np.any(t_arr < 1):
            raise UsageError("large_t regime requires t >= 1")
        out = consts.K * (1 + r_arr**2 / t_arr) ** (1 + 1 / n) * np.exp(lam1 * t_arr - r_arr**2 / (4 * t_arr))
    else:
        raise UsageError(f"unknown regime {regime!r}; expected 'small_t' or 'large_t'")
    return out if (np.ndim(t) or np.ndim(r)) else float(out)


def _log_bound_ratios(t, r, D, n, lam1):
    log_h = log_heat_kernel_h3(t, r)
    small = log_h + np.log(np.minimum(1.0, t ** (n / 2))) - lam1 * t + r * r / (D * t)
    large = log_h - (1 + 1 / n) * np.log1p(r * r / t) - lam1 * t + r * r / (4 * t)
    return small, large


def fit_bound_constants(t_grid: Iterable[float], r_grid: Iterable[float], D: float = 8.0,
                        space: ModelSpace = H3) -> BoundConstants:
    """Smallest C (fixed D) and K making the heat bounds hold on a grid.

    C is fitted over every grid point, K over points with t >= 1.  Ratios
    are formed in log space so grids reaching r = 50, t = 1e-3 do not
    overflow.
    """
    _require_h3(space)
    t = np.asarray(list(t_grid), dtype=float)
    r = np.asarray(list(r_grid), dtype=float)
    if t.size == 0 or r.size == 0:
        raise UsageError("empty grid")
    if t.min() < 1e-3 or t.max() > 100 or r.min() < 0 or r.max() > 50:
        raise DomainError("grid must lie in t in [1e-3, 100], r in [0, 50]")
    T, Rr = np.meshgrid(t, r, indexing="ij")
    small, large = _log_bound_ratios(T, Rr, D, space.n, space.lambda1)
    log_c = float(np.max(small))
    mask = T >= 1
    log_k = float(np.max(large[mask])) if mask.any() else math.nan
    if not math.isfinite(log_c) or (mask.any() and not math.isfinite(log_k)):
        raise CheckFailure(f"unbounded heat-kernel ratio on grid (log C={log_c}, log K={log_k})")
    C = math.exp(log_c) * (1 + FIT_HEADROOM)
    K = math.exp(log_k) * (1 + FIT_HEADROOM) if mask.any() else None
    return BoundConstants(C=C, D=D, K=K)


def check_heat_bounds(consts: BoundConstants, t_grid, r_grid, space: ModelSpace = H3) -> dict:
    """Pointwise re-check of both bounds against the closed-form kernel.

    Returns the worst ratio kernel/bound for each regime and whether every
    grid point satisfies kernel <= bound.
    """
    _require_h3(space)
    T, Rr = np.meshgrid(np.asarray(list(t_grid), float), np.asarray(list(r_grid), float), indexing="ij")
    h = heat_kernel_h3(T, Rr)
    out = {}
    small = heat_upper_bound(T, Rr, consts, "small_t", space)
    out["small_t_ok"] = bool(np.all(h <= small))
    with np.errstate(divide="ignore", invalid="ignore"):
        out["small_t_worst"] = float(np.nanmax(np.where(small > 0, h / small, 0.0)))
    mask = T >= 1
    if consts.K is not None and mask.any():
        large = heat_upper_bound(T[mask], Rr[mask], consts, "large_t", space)
        out["large_t_ok"] = bool(np.all(h[mask] <= large))
        with np.errstate(divide="ignore", invalid="ignore"):
            out["large_t_worst"] = float(np.nanmax(np.where(large > 0, h[mask] / large, 0.0)))
    return out


# ------------------------------------------------------ generator at origin


def generator_consistency(f: Callable[[float], float], t_seq: Sequence[float], r_max: float,
                          d2f0: float, space: ModelSpace = H3) -> list[float]:
    """(u(t, 0) - f(0))/t - n f''(0) for each t, where u = e^{t Delta} f.

    ``f`` is radial about the origin, supported in [0, r_max], with
    f'(0) = 0, and ``d2f0`` is f''(0).  Delta f(0) = n f''(0) for such f.
    """
    _require_h3(space)
    lap0 = space.n * d2f0
    out = []
    for t in t_seq:
        s = math.sqrt(t)
        pts = [p for p in (s, 3 * s, 6 * s) if p < r_max]

        def integrand(r):
            return math.exp(_log_mass_integrand(t, r)) * f(r)

        u, _ = integrate.quad(integrand, 0.0, r_max, epsabs=1e-15, epsrel=1e-13, limit=500, points=pts or None)
        out.append((u - f(0.0)) / t - lap0)
    return out
