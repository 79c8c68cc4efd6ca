"""Acceptance checks shared by the test suite and ``harmexit verify-all``.

Each check returns a :class:`CheckResult` with the JSON shape
``{check_name, status, value, tolerance, ...}``.  Monte Carlo checks also
carry a SHA-256 digest of their raw outputs so reruns at other thread
counts can be compared bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import subprocess
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import __version__
from .dirichlet_oracle import (dirichlet_eigenvalues, mean_exit_time, principal_eigenvalue, radial_bvp,
                               survival)
from .eigenfun import (BoundaryData, boundary_convergence_probe, c_lambda_probe, estimate_psi,
                       probe_is_converging, psi_profile)
from .errors import EscapeError
from .geometry import ModelSpace
from .kernels import (check_heat_bounds, fit_bound_constants, green_kernel, heat_mass, heat_tail_mass)
from .sde_sim import SimConfig, log_survival_slope, sample_radial_exit, set_threads, transience_probe

H3 = ModelSpace.real_hyperbolic(3)
DR11 = ModelSpace.damek_ricci(1, 1)
DEFAULT_SEED = 20240611
MC_CHECKS = (6, 7, 8, 9, 10)


@dataclass
class CheckResult:
    check_name: str
    status: str
    value: object
    tolerance: object
    runtime_s: float = 0.0
    budget_s: float | None = None
    details: dict = field(default_factory=dict)
    digest: str | None = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def line(self) -> str:
        return f"[{self.status.upper()}] {self.check_name}: value={_short(self.value)} tol={self.tolerance} " \
               f"({self.runtime_s:.1f}s)"

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


class _Digest:
    def __init__(self):
        self._h = hashlib.sha256()

    def add(self, *items):
        for it in items:
            if isinstance(it, np.ndarray):
                self._h.update(np.ascontiguousarray(it).tobytes())
            else:
                self._h.update(repr(it).encode())
        return self

    def hexdigest(self):
        return self._h.hexdigest()


def _timed(name: str, budget: float | None, fn: Callable[[], tuple]) -> CheckResult:
    t0 = time.perf_counter()
    ok, value, tol, details, digest = fn()
    dt = time.perf_counter() - t0
    if budget is not None:
        details["runtime_ok"] = dt < budget
        ok = ok and dt < budget
    return CheckResult(name, "pass" if ok else "fail", value, tol, dt, budget, details, digest)


# --------------------------------------------------------- deterministic


def check_green() -> CheckResult:
    def run():
        exact = (1.0 / math.tanh(1.0) - 1.0) / (4 * math.pi)
        g1 = green_kernel(H3, 1.0).value
        rs = np.linspace(0.1, 20.0, 200)
        vals = np.array([green_kernel(H3, float(r)).value for r in rs])
        mono = bool(np.all(np.diff(vals) < 0) and np.all(vals > 0))
        err = abs(g1 - exact)
        return err <= 1e-8 and mono, g1, 1e-8, {"exact": exact, "abs_error": err, "monotone_decreasing": mono,
                                                  "value_at_20": float(vals[-1])}, None

    return _timed("1 green kernel", 1.0, run)


def check_completeness() -> CheckResult:
    def run():
        errs = {t: abs(heat_mass(t).value - 1.0) for t in (0.1, 1.0, 10.0)}
        worst = max(errs.values())
        return worst <= 1e-8, worst, 1e-8, {"abs_error_by_t": errs}, None

    return _timed("2 stochastic completeness", 1.0, run)


def heat_grids():
    return np.geomspace(1e-3, 100.0, 121), np.linspace(0.0, 50.0, 201)


def check_heat_bounds_fit() -> CheckResult:
    def run():
        t_grid, r_grid = heat_grids()
        consts = fit_bound_constants(t_grid, r_grid, D=8.0)
        rep = check_heat_bounds(consts, t_grid, r_grid)
        finite = math.isfinite(consts.C) and math.isfinite(consts.K)
        ok = finite and rep["small_t_ok"] and rep["large_t_ok"]
        return ok, {"C": consts.C, "K": consts.K}, "finite and bound >= kernel on grid", \
            {**rep, "D": consts.D}, None

    return _timed("3 heat bounds", 10.0, run)


def check_tail_mass() -> CheckResult:
    def run():
        Rs = np.linspace(10.0, 20.0, 11)
        logs = np.array([math.log(heat_tail_mass(1.0, float(R)).value) for R in Rs])
        slope = float(np.polyfit(Rs, logs, 1)[0])
        secants = np.diff(logs) / np.diff(Rs)
        ts = (0.1, 0.05, 0.025)
        seq = [heat_tail_mass(t, 1.0).value / t for t in ts]
        dec = all(b < a for a, b in zip(seq, seq[1:]))
        ok = slope <= -1 and float(secants.max()) <= -1 and dec
        return ok, slope, "slope <= -1; (1/t) tail decreasing", \
            {"max_secant_slope": float(secants.max()), "scaled_tail": dict(zip(ts, seq)), "decreasing": dec}, None

    return _timed("4 tail mass", 5.0, run)


def check_spectrum() -> CheckResult:
    def run():
        worst = 0.0
        for R in (1.0, math.pi):
            ev = dirichlet_eigenvalues(H3, R, 5)
            exact = -1.0 - (np.arange(1, 6) * math.pi / R) ** 2
            worst = max(worst, float(np.max(np.abs(ev - exact))))
        princ = [principal_eigenvalue(H3, R) for R in (1.0, 2.0, 4.0, 8.0)]
        mono = all(b > a for a, b in zip(princ, princ[1:])) and princ[-1] < H3.lambda1
        return worst <= 1e-8 and mono, worst, 1e-8, {"principal": princ, "increasing_below_lambda1": mono}, None

    return _timed("5 dirichlet spectrum", 5.0, run)


# ----------------------------------------------------------- Monte Carlo


def check_exit_distribution(seed: int) -> CheckResult:
    def run():
        cfg = SimConfig(seed=seed, n_paths=100_000, dt=1e-4)
        batch = sample_radial_exit(H3, 1.0, 0.0, cfg)
        n = len(batch)
        rows, ok = {}, True
        for t in (0.3, 0.6, 1.0):
            p = survival(H3, 1.0, 0.0, t)
            emp = float(np.count_nonzero(batch.tau > t)) / n
            se = math.sqrt(p * (1 - p) / n)
            good = abs(emp - p) <= 3 * se
            ok &= good
            rows[t] = {"empirical": emp, "oracle": p, "se": se, "ok": good}
        slope, slope_se = log_survival_slope(batch, 0.3, 1.0)
        target = -(1 + math.pi**2)
        rel = abs(slope / target - 1)
        ok &= rel <= 0.05
        mean_tau = float(np.mean(batch.tau))
        dig = _Digest().add(batch.tau, batch.steps, slope).hexdigest()
        return ok, rel, "3 SE; slope within 5%", \
            {"survival": rows, "slope": slope, "slope_se": slope_se, "target_slope": target,
             "mean_tau": mean_tau, "mean_tau_oracle": mean_exit_time(H3, 1.0, 0.0)}, dig

    return _timed("6 exit-time distribution", 300.0, run)


def check_main_theorem(seed: int, n_big: int = 1_000_000, n_profile: int = 100_000) -> CheckResult:
    def run():
        one = BoundaryData.constant(1.0)
        cfg = SimConfig(seed=seed, n_paths=n_big)
        dig = _Digest()
        a = estimate_psi(H3, 1.0, 0.0, 0.0, one, n_big, seed, cfg)
        ok_a = a.mean == 1.0 and a.stderr == (0.0, 0.0)
        out = {"a": {"mean": a.mean, "stderr": a.stderr, "ok": ok_a}}
        ok = ok_a
        for key, lam in (("b", -0.5), ("c", -0.5 + 0.3j)):
            e = estimate_psi(H3, 1.0, 0.0, lam, one, n_big, seed, cfg)
            e.oracle_value = complex(radial_bvp(H3, 1.0, lam).center_value)
            good = e.agrees(3.0)
            ok &= good
            out[key] = e.to_dict() | {"ok": good}
            dig.add(e.mean.real, e.mean.imag, e.stderr)
        prof = psi_profile(H3, 1.0, [0.0, 0.25, 0.5, 0.75], -0.5, n_profile, seed + 1)
        ok &= prof.ok
        out["d"] = {"rows": [r.to_dict() for r in prof.rows], "flagged": prof.flagged, "ok": prof.ok}
        for r in prof.rows:
            dig.add(r.mean.real, r.stderr)
        worst_z = max(out["b"]["z_score"], out["c"]["z_score"], *(r.z_score for r in prof.rows))
        return ok, worst_z, "z <= 3", out, dig.hexdigest()

    return _timed("7 main theorem", 600.0, run)


def check_boundary(seed: int, n_paths: int = 1_000_000) -> CheckResult:
    def run():
        deltas = [0.2, 0.1, 0.05, 0.02]
        dig = _Digest()
        out, ok, finals = {}, True, []
        cases = (("constant", -0.5, BoundaryData.constant(1.0)),
                 ("harmonic_Y10", 0.0, BoundaryData.spherical_harmonic(1, 0, dim=2)))
        for name, lam, phi in cases:
            rows = boundary_convergence_probe(H3, 1.0, lam, phi, deltas, n_paths, seed)
            good = probe_is_converging(rows, phi.sup)
            ok &= good
            finals.append(rows[-1].error / phi.sup)
            out[name] = {"ok": good, "rows": [
                {"delta": r.delta, "error": r.error, "error_se": r.error_se, "oracle_error": r.oracle_error}
                for r in rows]}
            for r in rows:
                dig.add(r.estimate.mean.real, r.estimate.mean.imag, r.error_se)
        return ok, max(finals), "decreasing; final < 0.02 sup|phi|", out, dig.hexdigest()

    return _timed("8 boundary continuity", 600.0, run)


def check_c_lambda(seed: int, n_paths: int = 100_000) -> CheckResult:
    def run():
        radii = [0.0, 0.5, 0.9]
        dig = _Digest()
        p = c_lambda_probe(H3, 1.0, -0.5, radii, n_paths, seed)
        centre = complex(radial_bvp(H3, 1.0, -0.5).center_value)
        sup = p.sup_estimate
        z_sup = abs(sup.mean.real - centre.real) / sup.stderr[0]
        ok = p.finite and z_sup <= 3 and sup.x == 0.0
        q = c_lambda_probe(H3, 1.0, -0.99, radii, n_paths, seed)
        near = q.finite and all(r.agrees(3.0) for r in q.rows)
        ok &= near
        for r in p.rows + q.rows:
            dig.add(r.mean.real, r.stderr)
        return ok, z_sup, "z <= 3", {
            "sup_lambda_-0.5": sup.mean.real, "oracle_centre": centre.real, "argmax_radius": sup.x,
            "lambda_-0.99": [{"r": r.x, "mean": r.mean.real, "oracle": r.oracle_value.real, "z": r.z_score,
                              "n_eff": r.n_eff} for r in q.rows],
            "near_top_ok": near}, dig.hexdigest()

    return _timed("9 C_lambda bound", 300.0, run)


def check_transience(seed: int, n_paths: int = 100_000, dt: float = 4e-3) -> CheckResult:
    def run():
        dig = _Digest()
        out, ok, worst = {}, True, 0.0
        for sp in (H3, DR11):
            esc = 0
            try:
                b = sample_radial_exit(sp, 1.0, 0.0, SimConfig(seed=seed, n_paths=10_000, max_time=1e3))
                dig.add(b.tau)
            except EscapeError as e:
                esc = int(np.count_nonzero(e.batch.status == 1))
            rows = transience_probe(sp, [5.0, 10.0, 20.0], SimConfig(seed=seed, n_paths=n_paths, dt=dt))
            ratio = rows[-1].mean_distance / rows[-1].T
            rel = abs(ratio / (2 * sp.rho) - 1)
            mono = all(rows[i + 1].frac_beyond[d] >= rows[i].frac_beyond[d]
                       for i in range(len(rows) - 1) for d in rows[0].frac_beyond)
            late_slope = (rows[2].mean_distance - rows[1].mean_distance) / (rows[2].T - rows[1].T)
            good = esc == 0 and rel <= 0.05 and mono
            ok &= good
            worst = max(worst, rel)
            out[sp.key] = {"escapes": esc, "mean_d_over_T": ratio, "two_rho": 2 * sp.rho, "rel_error": rel,
                           "frac_beyond_monotone": mono, "slope_T10_T20": late_slope, "ok": good}
            dig.add(*[r.mean_distance for r in rows])
        return ok, worst, 0.05, out, dig.hexdigest()

    return _timed("10 transience", 120.0, run)


MC_FUNCS = {6: check_exit_distribution, 7: check_main_theorem, 8: check_boundary, 9: check_c_lambda,
            10: check_transience}
DET_FUNCS = {1: check_green, 2: check_completeness, 3: check_heat_bounds_fit, 4: check_tail_mass,
             5: check_spectrum}


def mc_seed(base: int, k: int) -> int:
    return (int(base) + 1000 * k) % 2**64


def run_check(k: int, seed: int = DEFAULT_SEED) -> CheckResult:
    if k in DET_FUNCS:
        return DET_FUNCS[k]()
    if k in MC_FUNCS:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return MC_FUNCS[k](mc_seed(seed, k))
    if k == 11:
        return check_determinism(seed)
    raise KeyError(k)


def mc_digests(seed: int, threads: int) -> dict:
    """Digests of checks 6-10 computed in a fresh interpreter with ``threads`` workers."""
    env = dict(os.environ, NUMBA_NUM_THREADS=str(max(threads, 1)))
    code = ("import json,sys;from harmexit import verify as v;from harmexit.sde_sim import set_threads;"
            f"set_threads({threads});"
            f"print(json.dumps({{k: v.run_check(k, {seed}).digest for k in v.MC_CHECKS}}))")
    proc = subprocess.run([sys.executable, "-W", "ignore", "-c", code], env=env, capture_output=True,
                          text=True, check=True)
    return {int(k): d for k, d in json.loads(proc.stdout.strip().splitlines()[-1]).items()}


def check_determinism(seed: int, reference: dict | None = None, threads: tuple = (1, 4)) -> CheckResult:
    """Reruns checks 6-10 at each thread count and compares output digests.

    ``reference`` (digests from the current process) replaces the first
    thread count's rerun when given.
    """
    def run():
        runs = {}
        todo = list(threads)
        if reference is not None:
            runs[f"threads={set_threads(None)} (in-process)"] = dict(reference)
            todo = [t for t in todo if t != set_threads(None)]
        for t in todo:
            runs[f"threads={t}"] = mc_digests(seed, t)
        values = list(runs.values())
        same = all(v == values[0] for v in values[1:]) and all(values[0].get(k) for k in MC_CHECKS)
        return same, same, "bitwise identical", {"digests": runs}, None

    return _timed("11 determinism", None, run)


def run_all(seed: int = DEFAULT_SEED, checks=range(1, 12), echo: Callable[[str], None] | None = None) -> dict:
    results = []
    ref = {}
    for k in checks:
        if k == 11:
            res = check_determinism(seed, ref if all(j in ref for j in MC_CHECKS) else None)
        else:
            res = run_check(k, seed)
            if k in MC_CHECKS:
                ref[k] = res.digest
        results.append(res)
        if echo:
            echo(res.line())
    return {
        "tool": f"harmexit {__version__}",
        "seed": seed,
        "all_passed": all(r.passed for r in results),
        "checks": [r.to_dict() for r in results],
    }
