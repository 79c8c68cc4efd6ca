"""Brownian motion generated by the Laplacian: exit times from geodesic balls.

Two samplers are provided.

* Radial: Euler-Maruyama for dr = (A'/A)(r) dt + sqrt(2) dW.  Inside
  r < eps_core the drift ~ (n-1)/r is stiff, so the step is taken exactly
  for the locally Euclidean motion: r -> |r e1 + sqrt(2 dt) Z|, Z ~ N(0, I_n).
  Between steps the path may cross the boundary and come back; a
  Brownian-bridge test with crossing probability
  exp(-(R - r)(R - r') / dt) catches those excursions.
* Full walk (H^2 and H^3): a geodesic random walk on the hyperboloid model.

Randomness is counter based: path ``i`` of a run with seed ``s`` draws from
a SplitMix64 stream keyed by (s, i), so every path is reproducible on its
own, independently of thread count, chunking or scheduling.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numba
import numpy as np
from numba import njit, prange

from . import __version__
from .errors import DomainError, EscapeError, UsageError
from .geometry import ModelSpace

EXITED, ESCAPED, CENSORED = 0, 1, 2
CHUNK = 1 << 16

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)
_INV53 = 2.0**-53
_BRIDGE_CUTOFF = 40.0


# ----------------------------------------------------------------- RNG core


@njit(inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(inline="always")
def _path_key(seed, index):
    return _mix(_mix(seed) + (np.uint64(index) + np.uint64(1)) * _GOLDEN)


@njit(inline="always")
def _uniform(key, ctr):
    # open interval (0, 1)
    return (float(_mix(key + np.uint64(ctr) * _GOLDEN) >> _S11) + 0.5) * _INV53


@njit(inline="always")
def _normal_pair(key, ctr):
    """Two independent normals by the Marsaglia polar method; returns (z0, z1, ctr)."""
    while True:
        v1 = 2.0 * _uniform(key, ctr) - 1.0
        v2 = 2.0 * _uniform(key, ctr + 1) - 1.0
        ctr += 2
        s = v1 * v1 + v2 * v2
        if 0.0 < s < 1.0:
            f = math.sqrt(-2.0 * math.log(s) / s)
            return v1 * f, v2 * f, ctr


@njit(inline="always")
def _next_normal(key, ctr, has_spare, spare):
    """One normal, consuming the cached spare first; returns (z, ctr, has_spare, spare)."""
    if has_spare:
        return spare, ctr, False, 0.0
    z0, z1, ctr = _normal_pair(key, ctr)
    return z0, ctr, True, z1


def uniform_stream(seed: int, index: int, count: int) -> np.ndarray:
    """First ``count`` uniforms of path ``index``'s stream (for testing the generator)."""
    return _uniform_stream(np.uint64(seed), index, count)


@njit(cache=True)
def _uniform_stream(seed, index, count):
    key = _path_key(seed, index)
    out = np.empty(count)
    for k in range(count):
        out[k] = _uniform(key, k)
    return out


# ------------------------------------------------------------ radial paths


@njit(inline="always")
def _drift(r, c1, a, c2, b):
    # c1 coth(a r) + c2 tanh(b r) through one expm1 when a == b
    x = 2.0 * a * r
    if x > 40.0:
        coth_a = 1.0
        em = math.inf
    else:
        em = math.expm1(x)
        coth_a = (em + 2.0) / em
    if c2 == 0.0:
        return c1 * coth_a
    if b == a:
        tanh_b = 1.0 if x > 40.0 else em / (em + 2.0)
    else:
        tanh_b = math.tanh(b * r)
    return c1 * coth_a + c2 * tanh_b


@njit(inline="always")
def _radial_step(r, key, ctr, has_spare, spare, sig, dt, c1, a, c2, b, n, eps_core):
    """One radial step; returns (r_new, ctr, has_spare, spare)."""
    if r < eps_core:
        z, ctr, has_spare, spare = _next_normal(key, ctr, has_spare, spare)
        x = r + sig * z
        s = x * x
        for _ in range(n - 1):
            z, ctr, has_spare, spare = _next_normal(key, ctr, has_spare, spare)
            s += (sig * z) ** 2
        return math.sqrt(s), ctr, has_spare, spare
    z, ctr, has_spare, spare = _next_normal(key, ctr, has_spare, spare)
    r_new = r + _drift(r, c1, a, c2, b) * dt + sig * z
    return abs(r_new), ctr, has_spare, spare


@njit(cache=True)
def _radial_exit_path(key, r0, R_eff, dt, c1, a, c2, b, n, eps_core, max_steps, horizon_steps):
    sig = math.sqrt(2.0 * dt)
    r = r0
    ctr = 0
    k = 0
    has_spare, spare = False, 0.0
    while True:
        if k >= max_steps:
            return k * dt, r, k, ESCAPED
        if k >= horizon_steps:
            return k * dt, r, k, CENSORED
        r_new, ctr, has_spare, spare = _radial_step(r, key, ctr, has_spare, spare, sig, dt, c1, a, c2, b, n, eps_core)
        k += 1
        if r_new >= R_eff:
            return k * dt, R_eff, k, EXITED
        expo = (R_eff - r) * (R_eff - r_new) / dt
        if expo < _BRIDGE_CUTOFF:
            u = _uniform(key, ctr)
            ctr += 1
            if u < math.exp(-expo):
                return k * dt, R_eff, k, EXITED
        r = r_new


@njit(parallel=True, cache=True)
def _radial_exit_batch(seed, first, count, r0, R_eff, dt, c1, a, c2, b, n, eps_core, max_steps, horizon_steps):
    tau = np.empty(count)
    rad = np.empty(count)
    steps = np.empty(count, dtype=np.int64)
    status = np.empty(count, dtype=np.int8)
    for i in prange(count):
        key = _path_key(seed, first + i)
        t, r, k, s = _radial_exit_path(key, r0, R_eff, dt, c1, a, c2, b, n, eps_core, max_steps, horizon_steps)
        tau[i] = t
        rad[i] = r
        steps[i] = k
        status[i] = s
    return tau, rad, steps, status


@njit(parallel=True, cache=True)
def _radial_free_batch(seed, first, count, record_steps, dt, c1, a, c2, b, n, eps_core):
    # free radial diffusion from the origin, recording r at the given step counts
    m = record_steps.size
    out = np.zeros((count, m))
    sig = math.sqrt(2.0 * dt)
    for i in prange(count):
        key = _path_key(seed, first + i)
        r = 0.0
        ctr = 0
        k = 0
        has_spare, spare = False, 0.0
        for j in range(m):
            target = record_steps[j]
            while k < target:
                r, ctr, has_spare, spare = _radial_step(r, key, ctr, has_spare, spare, sig, dt, c1, a, c2, b, n, eps_core)
                k += 1
            out[i, j] = r
    return out


# ---------------------------------------------------------- hyperboloid walk


@njit(inline="always")
def _crossing_parameter(x0, u0, length, cosh_R):
    # smallest s in [0, length] with x0 cosh s + u0 sinh s = cosh R
    a_p = x0 + u0
    disc = cosh_R * cosh_R - x0 * x0 + u0 * u0
    if a_p <= 0.0 or disc < 0.0:
        return length
    sq = math.sqrt(disc)
    best = length
    for e in ((cosh_R - sq) / a_p, (cosh_R + sq) / a_p):
        if e >= 1.0:
            s = math.log(e)
            if s <= length and s < best:
                best = s
    return best


@njit(cache=True)
def _walk_exit_path(key, start, n, R_eff, dt, max_steps, sphere_steps, out_point):
    """Geodesic random walk on the hyperboloid; writes the exit point to out_point.

    ``start`` and ``out_point`` hold (x_0, x_1, .., x_n) with x_0 = cosh d.
    Tangent steps are N(0, 2 dt I_n) (``sphere_steps`` False) or of fixed
    length sqrt(2 n dt) in a uniform direction.
    """
    x = start.copy()
    x_prev = np.empty(n + 1)
    u = np.empty(n + 1)
    v = np.empty(n)
    sig = math.sqrt(2.0 * dt)
    step_len = math.sqrt(2.0 * n * dt)
    cosh_R = math.cosh(R_eff)
    ctr = 0
    k = 0
    has_spare, spare = False, 0.0
    xs2 = 0.0
    for j in range(1, n + 1):
        xs2 += x[j] * x[j]
    d = math.asinh(math.sqrt(xs2))
    while True:
        if k >= max_steps:
            out_point[:] = x
            return k * dt, d, k, ESCAPED
        for j in range(n):
            v[j], ctr, has_spare, spare = _next_normal(key, ctr, has_spare, spare)
        vn = 0.0
        for j in range(n):
            vn += v[j] * v[j]
        vn = math.sqrt(vn)
        length = step_len if sphere_steps else sig * vn
        # boost the unit direction v/|v| from the tangent space at the origin to x
        dot = 0.0
        for j in range(n):
            dot += x[j + 1] * v[j]
        dot /= vn
        u[0] = dot
        c = dot / (1.0 + x[0])
        for j in range(n):
            u[j + 1] = v[j] / vn + x[j + 1] * c
        ch = math.cosh(length)
        sh = math.sinh(length)
        xs2 = 0.0
        for j in range(n + 1):
            x_prev[j] = x[j]
        for j in range(1, n + 1):
            x[j] = ch * x[j] + sh * u[j]
            xs2 += x[j] * x[j]
        # re-project onto the hyperboloid
        x[0] = math.sqrt(1.0 + xs2)
        k += 1
        d_new = math.asinh(math.sqrt(xs2))
        if d_new >= R_eff:
            s = _crossing_parameter(x_prev[0], u[0], length, cosh_R)
            ch = math.cosh(s)
            sh = math.sinh(s)
            for j in range(n + 1):
                out_point[j] = ch * x_prev[j] + sh * u[j]
            return k * dt, R_eff, k, EXITED
        if not sphere_steps:
            expo = (R_eff - d) * (R_eff - d_new) / dt
            if expo < _BRIDGE_CUTOFF:
                uu = _uniform(key, ctr)
                ctr += 1
                if uu < math.exp(-expo):
                    out_point[:] = x
                    return k * dt, R_eff, k, EXITED
        d = d_new


@njit(parallel=True, cache=True)
def _walk_exit_batch(seed, first, count, start, n, R_eff, dt, max_steps, sphere_steps):
    tau = np.empty(count)
    rad = np.empty(count)
    steps = np.empty(count, dtype=np.int64)
    status = np.empty(count, dtype=np.int8)
    points = np.empty((count, n + 1))
    for i in prange(count):
        key = _path_key(seed, first + i)
        t, r, k, s = _walk_exit_path(key, start, n, R_eff, dt, max_steps, sphere_steps, points[i])
        tau[i] = t
        rad[i] = r
        steps[i] = k
        status[i] = s
    return tau, rad, steps, status, points


# ----------------------------------------------------------------- Python API


@dataclass(frozen=True)
class SimConfig:
    """Discretization and run parameters for the exit-time samplers.

    ``eps_core`` defaults to 0.05 R when left as None.
    """

    seed: int
    n_paths: int
    dt: float = 1e-4
    boundary_tol: float = 1e-6
    eps_core: float | None = None
    max_time: float = 1e3

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if not (self.dt > 0 and self.boundary_tol > 0 and self.max_time > 0):
            raise DomainError("dt, boundary_tol and max_time must be > 0")
        if not math.isfinite(self.max_time):
            raise DomainError("max_time must be finite")

    def core_radius(self, R: float) -> float:
        return 0.05 * R if self.eps_core is None else self.eps_core

    def validate_for(self, R: float) -> None:
        if self.dt > 1e-2 * R * R:
            raise DomainError(f"dt={self.dt} too coarse for R={R}; need dt <= 1e-2 R^2")
        if not 0 < self.core_radius(R) < R / 10:
            raise DomainError("eps_core must lie in (0, R/10)")

    def with_(self, **kw) -> "SimConfig":
        d = asdict(self)
        d.update(kw)
        return SimConfig(**d)


@dataclass(frozen=True)
class ExitSample:
    tau: float
    exit_radius: float
    exit_point: tuple[tuple[float, ...], float] | None
    steps: int
    stream_id: int


@dataclass
class ExitBatch:
    """Columnar store of simulated exits; ``stream_id`` is the path index."""

    tau: np.ndarray
    exit_radius: np.ndarray
    steps: np.ndarray
    stream_id: np.ndarray
    status: np.ndarray
    exit_dir: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return self.tau.size

    def __getitem__(self, i) -> ExitSample:
        point = None
        if self.exit_dir is not None:
            point = (tuple(float(v) for v in self.exit_dir[i]), float(self.exit_radius[i]))
        return ExitSample(float(self.tau[i]), float(self.exit_radius[i]), point,
                          int(self.steps[i]), int(self.stream_id[i]))

    def __iter__(self) -> Iterator[ExitSample]:
        return (self[i] for i in range(len(self)))

    @property
    def exited(self) -> np.ndarray:
        return self.status == EXITED

    def to_csv(self, path) -> None:
        """CSV export; the first line is a ``#`` comment holding the provenance JSON."""
        dims = 0 if self.exit_dir is None else self.exit_dir.shape[1]
        names = ["x", "y", "z"][:dims] if dims <= 3 else [str(j) for j in range(dims)]
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(self.provenance, sort_keys=True) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["stream_id", "tau", "exit_radius"] + [f"exit_dir_{c}" for c in names] + ["steps"])
            for i in range(len(self)):
                row = [int(self.stream_id[i]), repr(float(self.tau[i])), repr(float(self.exit_radius[i]))]
                if dims:
                    row += [repr(float(v)) for v in self.exit_dir[i]]
                row.append(int(self.steps[i]))
                w.writerow(row)

    def to_npz(self, path) -> None:
        """Binary columnar dump (numpy ``.npz``) with the provenance JSON in ``header``."""
        arrays = dict(tau=self.tau, exit_radius=self.exit_radius, steps=self.steps,
                      stream_id=self.stream_id, status=self.status,
                      header=np.array(json.dumps(self.provenance, sort_keys=True)))
        if self.exit_dir is not None:
            arrays["exit_dir"] = self.exit_dir
        np.savez(path, **arrays)

    @classmethod
    def from_npz(cls, path) -> "ExitBatch":
        with np.load(path) as z:
            return cls(z["tau"], z["exit_radius"], z["steps"], z["stream_id"], z["status"],
                       z["exit_dir"] if "exit_dir" in z else None, json.loads(str(z["header"])))


def set_threads(threads: int | None) -> int:
    """Set the numba worker count (capped at the configured maximum); returns it."""
    if threads is not None:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    return numba.get_num_threads()


def _provenance(space: ModelSpace, config: SimConfig, **extra) -> dict:
    d = {"space": space.key, "config": asdict(config), "tool": f"harmexit {__version__}"}
    d.update(extra)
    return d


def _drift_args(space: ModelSpace):
    _, m_s, a, m_c, b = space.coefficients
    return m_s * a, a, m_c * b, b


def _check_escapes(batch: ExitBatch, config: SimConfig) -> ExitBatch:
    n_esc = int(np.count_nonzero(batch.status == ESCAPED))
    if n_esc:
        err = EscapeError(f"{n_esc} of {len(batch)} paths did not exit before max_time={config.max_time}")
        err.batch = batch
        raise err
    return batch


def sample_radial_exit(space: ModelSpace, R: float, r0: float, config: SimConfig,
                       horizon: float | None = None, first_path: int = 0) -> ExitBatch:
    """Exit times from the ball B(R) of the radial process started at r0.

    ``horizon`` stops paths early (status CENSORED) without raising; paths
    still inside at ``max_time`` raise :class:`EscapeError`.
    """
    if not 0 <= r0 < R:
        raise DomainError("need 0 <= r0 < R")
    config.validate_for(R)
    c1, a, c2, b = _drift_args(space)
    R_eff = R - config.boundary_tol
    max_steps = int(math.ceil(config.max_time / config.dt))
    horizon_steps = max_steps + 1 if horizon is None else int(math.ceil(horizon / config.dt - 1e-9))
    seed = np.uint64(config.seed)
    parts = []
    for start in range(0, config.n_paths, CHUNK):
        count = min(CHUNK, config.n_paths - start)
        parts.append(_radial_exit_batch(seed, first_path + start, count, float(r0), R_eff, config.dt,
                                        c1, a, c2, b, space.n, config.core_radius(R), max_steps, horizon_steps))
    tau, rad, steps, status = (np.concatenate(p) for p in zip(*parts))
    ids = np.arange(first_path, first_path + config.n_paths, dtype=np.int64)
    batch = ExitBatch(tau, rad, steps, ids, status,
                      provenance=_provenance(space, config, sampler="radial", R=R, r0=r0, horizon=horizon))
    return _check_escapes(batch, config)


def hyperboloid_point(radius: float, direction: Sequence[float]) -> np.ndarray:
    """Hyperboloid coordinates of the point at distance ``radius`` from the origin."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    return np.concatenate([[math.cosh(radius)], math.sinh(radius) * d])


def sample_full_exit(space: ModelSpace, R: float, start: Sequence[float], config: SimConfig,
                     steps: str = "gaussian", first_path: int = 0) -> ExitBatch:
    """Exit points of the geodesic random walk on H^2 or H^3.

    ``start`` is either a radius (direction defaults to the last axis, the
    "north pole") or a pair (radius, direction).  ``steps`` selects Gaussian
    tangent increments with the bridge exit test, or ``"sphere"`` for
    fixed-length steps sqrt(2 n dt) in uniform directions.
    """
    if not space.has_full_walk:
        raise UsageError("full walks are only implemented on H^2 and H^3")
    if steps not in ("gaussian", "sphere"):
        raise UsageError("steps must be 'gaussian' or 'sphere'")
    n = space.n
    if isinstance(start, (int, float, np.floating, np.integer)):
        radius, direction = float(start), np.eye(n)[-1]
    else:
        radius, direction = float(start[0]), np.asarray(start[1], dtype=float)
    if not 0 <= radius < R:
        raise DomainError("start point must lie inside the ball")
    if direction.shape != (n,):
        raise DomainError(f"direction must have {n} components")
    config.validate_for(R)
    x0 = hyperboloid_point(radius, direction)
    R_eff = R - config.boundary_tol
    max_steps = int(math.ceil(config.max_time / config.dt))
    seed = np.uint64(config.seed)
    parts = []
    for s in range(0, config.n_paths, CHUNK):
        count = min(CHUNK, config.n_paths - s)
        parts.append(_walk_exit_batch(seed, first_path + s, count, x0, n, R_eff, config.dt, max_steps,
                                      steps == "sphere"))
    tau, rad, nsteps, status, points = (np.concatenate(p) for p in zip(*parts))
    spatial = points[:, 1:]
    dirs = spatial / np.linalg.norm(spatial, axis=1, keepdims=True)
    ids = np.arange(first_path, first_path + config.n_paths, dtype=np.int64)
    batch = ExitBatch(tau, rad, nsteps, ids, status, dirs,
                      provenance=_provenance(space, config, sampler=f"walk-{steps}", R=R,
                                             start_radius=radius, start_direction=direction.tolist()))
    return _check_escapes(batch, config)


sample_full_exit_h3 = sample_full_exit


# -------------------------------------------------------------- statistics


def empirical_survival(batch: ExitBatch | np.ndarray, t_grid: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Fraction of paths with tau > t on ``t_grid`` and its binomial standard error."""
    tau = batch.tau if isinstance(batch, ExitBatch) else np.asarray(batch)
    if tau.size == 0:
        raise DomainError("no samples")
    srt = np.sort(tau)
    t = np.asarray(t_grid, dtype=float)
    surv = 1.0 - np.searchsorted(srt, t, side="right") / srt.size
    se = np.sqrt(surv * (1.0 - surv) / srt.size)
    return surv, se


def log_survival_slope(batch: ExitBatch | np.ndarray, t_lo: float, t_hi: float) -> tuple[float, float]:
    """Slope of log P(tau > t) on [t_lo, t_hi] and its standard error.

    For an exponential tail the slope is minus the hazard rate, estimated
    by events per unit time at risk inside the window (the censored
    exponential maximum-likelihood estimate).
    """
    tau = batch.tau if isinstance(batch, ExitBatch) else np.asarray(batch)
    at_risk = tau[tau > t_lo]
    events = int(np.count_nonzero(at_risk <= t_hi))
    exposure = math.fsum(np.minimum(at_risk, t_hi) - t_lo)
    if events == 0 or exposure == 0:
        raise DomainError("no exits inside the window")
    rate = events / exposure
    return -rate, rate / math.sqrt(events)


@dataclass(frozen=True)
class ExitProbability:
    t: float
    p: float
    lower: float
    upper: float
    exits: int
    n_paths: int


def small_time_exit_prob(space: ModelSpace, R: float, k_dist: float, t_values: Sequence[float],
                         config: SimConfig, alpha: float = 0.05) -> list[ExitProbability]:
    """P(tau < t) from a start at distance ``k_dist`` from the boundary, with Wilson intervals.

    Paths are censored at max(t_values), so only the short-time window is simulated.
    Zero observed exits yield p = 0 with a one-sided upper bound.
    """
    from statsmodels.stats.proportion import proportion_confint

    r0 = R - k_dist
    batch = sample_radial_exit(space, R, max(r0, 0.0), config, horizon=max(t_values))
    out = []
    for t in t_values:
        hits = int(np.count_nonzero(batch.exited & (batch.tau < t)))
        lo, hi = proportion_confint(hits, len(batch), alpha=alpha, method="wilson")
        out.append(ExitProbability(float(t), hits / len(batch), float(lo), float(hi), hits, len(batch)))
    return out


def small_time_affinity(probs: Sequence[ExitProbability]) -> tuple[float, float]:
    """Least-squares slope of log P(tau < t) against 1/t and the fit's R^2."""
    x = np.array([1.0 / p.t for p in probs])
    y = np.log([p.p for p in probs])
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


@dataclass(frozen=True)
class TransienceRow:
    T: float
    mean_distance: float
    stderr: float
    frac_beyond: dict


def transience_probe(space: ModelSpace, T_grid: Sequence[float], config: SimConfig,
                     thresholds: Sequence[float] = (5.0, 10.0)) -> list[TransienceRow]:
    """Distance from the start at times ``T_grid`` for free (unabsorbed) radial motion."""
    T = np.asarray(T_grid, dtype=float)
    if np.any(T < 0) or np.any(np.diff(T) < 0):
        raise DomainError("T_grid must be non-negative and non-decreasing")
    if T.max() > config.max_time:
        raise DomainError("T_grid exceeds max_time")
    record = np.rint(T / config.dt).astype(np.int64)
    c1, a, c2, b = _drift_args(space)
    eps_core = config.eps_core if config.eps_core is not None else 0.05
    seed = np.uint64(config.seed)
    parts = [
        _radial_free_batch(seed, s, min(CHUNK, config.n_paths - s), record, config.dt, c1, a, c2, b,
                           space.n, eps_core)
        for s in range(0, config.n_paths, CHUNK)
    ]
    d = np.concatenate(parts)
    rows = []
    for j, t in enumerate(T):
        col = d[:, j]
        fr = {float(th): float(np.count_nonzero(col > th)) / col.size for th in thresholds}
        rows.append(TransienceRow(float(t), math.fsum(col) / col.size,
                                  float(np.std(col, ddof=1) / math.sqrt(col.size)) if col.size > 1 else 0.0, fr))
    return rows
