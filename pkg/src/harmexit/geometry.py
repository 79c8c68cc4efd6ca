"""Model harmonic manifolds described by their radial volume density.

Every catalog space has a density of the form

    A(r) = scale * sinh(a r)**m_sinh * cosh(b r)**m_cosh

so the mean curvature of geodesic spheres is

    A'(r)/A(r) = m_sinh * a * coth(a r) + m_cosh * b * tanh(b r).

Real hyperbolic space H^n (curvature -1) has scale=1, m_sinh=n-1, a=1,
m_cosh=0.  The Damek-Ricci space with parameters (p, q) has
scale=2**(p+q), m_sinh=p+q, m_cosh=q and a=b=1/2.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError

QUAD_TOL = 1e-10

# far enough that coth/tanh equal 1 in double precision
_FAR_FIELD = 80.0


@dataclass(frozen=True)
class ModelSpace:
    """A rank-one harmonic model manifold.

    Parameters
    ----------
    family : {"real_hyperbolic", "damek_ricci"}
    params : tuple of int
        ``(n,)`` for real hyperbolic space, ``(p, q)`` for Damek-Ricci.
    """

    family: str
    params: tuple[int, ...]
    rho: float = field(init=False)

    def __post_init__(self):
        if self.family == "real_hyperbolic":
            if len(self.params) != 1 or self.params[0] < 2:
                raise DomainError(f"real hyperbolic space needs n >= 2, got {self.params}")
        elif self.family == "damek_ricci":
            if len(self.params) != 2 or min(self.params) < 1:
                raise DomainError(f"Damek-Ricci space needs p, q >= 1, got {self.params}")
        else:
            raise DomainError(f"unknown family {self.family!r}")
        object.__setattr__(self, "params", tuple(int(v) for v in self.params))
        # rho is read off from the far-field mean curvature, not hard-coded
        object.__setattr__(self, "rho", 0.5 * drift(self, _FAR_FIELD / min(self.coefficients[2], self.coefficients[4])))

    @classmethod
    def real_hyperbolic(cls, n: int) -> "ModelSpace":
        return cls("real_hyperbolic", (n,))

    @classmethod
    def damek_ricci(cls, p: int, q: int) -> "ModelSpace":
        return cls("damek_ricci", (p, q))

    @property
    def n(self) -> int:
        if self.family == "real_hyperbolic":
            return self.params[0]
        p, q = self.params
        return p + q + 1

    @property
    def lambda1(self) -> float:
        """Top of the L2 spectrum of the Laplacian, ``-rho**2``."""
        return -self.rho**2

    @property
    def omega(self) -> float:
        """Volume of the unit (n-1)-sphere."""
        n = self.n
        return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)

    @property
    def coefficients(self) -> tuple[float, float, float, float, float]:
        """``(scale, m_sinh, a, m_cosh, b)`` of the density formula."""
        if self.family == "real_hyperbolic":
            return (1.0, float(self.params[0] - 1), 1.0, 0.0, 1.0)
        p, q = self.params
        return (2.0 ** (p + q), float(p + q), 0.5, float(q), 0.5)

    @property
    def key(self) -> str:
        if self.family == "real_hyperbolic":
            n = self.params[0]
            return f"h{n}" if n in (2, 3) else f"hn:{n}"
        return "dr:{}:{}".format(*self.params)

    @property
    def has_full_walk(self) -> bool:
        return self.family == "real_hyperbolic" and self.params[0] in (2, 3)

    def __repr__(self):
        return f"ModelSpace({self.key!r}, n={self.n}, rho={self.rho:g})"


_KEY_RE = re.compile(r"^(?:h(?P<small>[23])|hn:(?P<n>\d+)|dr:(?P<p>\d+):(?P<q>\d+))$")


def space_from_key(key: str) -> ModelSpace:
    """Parse a catalog key: ``h2``, ``h3``, ``hn:<n>`` or ``dr:<p>:<q>``."""
    m = _KEY_RE.match(key.strip().lower())
    if m is None:
        raise DomainError(f"unknown space key {key!r}; expected h2, h3, hn:<n> or dr:<p>:<q>")
    if m["small"]:
        return ModelSpace.real_hyperbolic(int(m["small"]))
    if m["n"]:
        return ModelSpace.real_hyperbolic(int(m["n"]))
    return ModelSpace.damek_ricci(int(m["p"]), int(m["q"]))


def _log_sinh(x):
    x = np.asarray(x, dtype=float)
    # log(sinh x) = x + log(1 - exp(-2x)) - log 2, stable for large x
    return x + np.log1p(-np.exp(-2.0 * x)) - math.log(2.0)


def _log_cosh(x):
    x = np.abs(np.asarray(x, dtype=float))
    return x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)


def _check_radius(r, *, positive=False):
    arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("radius must be finite")
    if positive and np.any(arr <= 0):
        raise DomainError("radius must be > 0")
    if np.any(arr < 0):
        raise DomainError("radius must be >= 0")
    return arr


def log_density(space: ModelSpace, r):
    """``log A(r)`` for r > 0, computed without overflow."""
    arr = _check_radius(r, positive=True)
    scale, m_s, a, m_c, b = space.coefficients
    out = math.log(scale) + m_s * _log_sinh(a * arr)
    if m_c:
        out = out + m_c * _log_cosh(b * arr)
    return out if np.ndim(r) else float(out)


def density(space: ModelSpace, r):
    """Radial volume density A(r); geodesic sphere volume is ``omega * A(r)``."""
    arr = _check_radius(r)
    scale, m_s, a, m_c, b = space.coefficients
    out = scale * np.sinh(a * arr) ** m_s * np.cosh(b * arr) ** m_c
    return out if np.ndim(r) else float(out)


def drift(space: ModelSpace, r):
    """Mean curvature A'(r)/A(r) of the geodesic sphere of radius r."""
    arr = _check_radius(r, positive=True)
    _, m_s, a, m_c, b = space.coefficients
    out = m_s * a / np.tanh(a * arr) + m_c * b * np.tanh(b * arr)
    return out if np.ndim(r) else float(out)


def volume_ball(space: ModelSpace, R: float) -> float:
    """Riemannian volume of a geodesic ball of radius R."""
    R = float(_check_radius(R, positive=True))
    val, _ = integrate.quad(lambda r: density(space, r), 0.0, R,
                            epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    return space.omega * val


class GrowthBounds(NamedTuple):
    """Infimum and supremum of ``A(r) exp(-2 rho r)`` over an interval."""

    inf: float
    sup: float


def growth_ratio(space: ModelSpace, r):
    """``A(r) / exp(2 rho r)``."""
    arr = _check_radius(r, positive=True)
    scale, m_s, a, m_c, b = space.coefficients
    # factored form: the exponential parts cancel exactly
    out = scale * (-np.expm1(-2.0 * a * arr) / 2.0) ** m_s * ((1.0 + np.exp(-2.0 * b * arr)) / 2.0) ** m_c
    residual_rate = m_s * a + m_c * b - 2.0 * space.rho
    if residual_rate:
        out = out * np.exp(residual_rate * arr)
    return out


def growth_constant(space: ModelSpace, r_min: float, r_max: float, n_grid: int = 4097) -> GrowthBounds:
    """Bounds of the normalized volume growth on ``[r_min, r_max]``.

    A dense grid scan locates the extrema; each is then polished with a
    bounded scalar minimization on the neighbouring grid cells.
    """
    if not (0 < r_min < r_max) or not math.isfinite(r_max):
        raise DomainError("need 0 < r_min < r_max < inf")
    grid = np.linspace(r_min, r_max, n_grid)
    vals = growth_ratio(space, grid)

    def polish(idx, sign):
        lo, hi = grid[max(idx - 1, 0)], grid[min(idx + 1, n_grid - 1)]
        res = optimize.minimize_scalar(lambda x: sign * float(growth_ratio(space, x)),
                                       bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-12})
        return sign * min(sign * vals[idx], res.fun)

    lo = polish(int(np.argmin(vals)), 1.0)
    hi = polish(int(np.argmax(vals)), -1.0)
    return GrowthBounds(float(lo), float(hi))

