"""Command line entry point.

Every subcommand is turned into a :class:`RunConfig`, validated against the
module preconditions, then executed.  ``harmexit run config.json`` takes the
same configuration as a file.  Exit status: 0 success, 1 failed numerical
check or run-time failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import DomainError, HarmexitError
from .geometry import space_from_key

TASKS = ("green", "heat-check", "tail", "survival", "exit-sim", "eigenfunction", "spectrum",
         "boundary-probe", "transience", "verify-all")
RANDOMIZED = {"exit-sim", "eigenfunction", "boundary-probe", "transience", "verify-all"}
NEEDS_BALL = {"survival", "exit-sim", "eigenfunction", "spectrum", "boundary-probe"}
OUTPUT_DIR_ENV = "HARMEXIT_OUTPUT_DIR"
REQUIRED = object()


class ConfigError(HarmexitError, ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


# ------------------------------------------------------------ parameters


def _float(name, v, lo=None, lo_strict=False):
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {v!r}") from None
    if isinstance(v, bool) or not math.isfinite(x):
        raise ConfigError(name, f"expected a finite number, got {v!r}")
    if lo is not None and (x <= lo if lo_strict else x < lo):
        raise ConfigError(name, f"must be {'>' if lo_strict else '>='} {lo}, got {x}")
    return x


def _int(name, v, lo=1):
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ConfigError(name, f"expected an integer, got {v!r}")
    try:
        x = int(v)
    except ValueError:
        raise ConfigError(name, f"expected an integer, got {v!r}") from None
    if isinstance(v, float) and v != x:
        raise ConfigError(name, f"expected an integer, got {v!r}")
    if x < lo:
        raise ConfigError(name, f"must be >= {lo}, got {x}")
    return x


def _flist(name, v, lo=None, lo_strict=False):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(name, "expected a non-empty list of numbers")
    return [_float(f"{name}[{i}]", x, lo, lo_strict) for i, x in enumerate(v)]


def _ilist(name, v):
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(name, "expected a non-empty list of integers")
    return [_int(f"{name}[{i}]", x) for i, x in enumerate(v)]


def _lam(name, v):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v, 0.0]
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError(name, "expected [re, im]")
    return [_float(f"{name}[0]", v[0]), _float(f"{name}[1]", v[1])]


def _phi(name, v):
    """``constant:<c>`` or ``harmonic:<l>:<m>``."""
    if not isinstance(v, str):
        raise ConfigError(name, "expected 'constant:<c>' or 'harmonic:<l>:<m>'")
    parts = v.strip().lower().split(":")
    if parts[0] == "constant" and len(parts) == 2:
        return f"constant:{_float(name, parts[1])!r}"
    if parts[0] == "harmonic" and len(parts) == 3:
        l, m = _int(name, parts[1], lo=0), _int(name, parts[2], lo=-10**6)
        if abs(m) > l:
            raise ConfigError(name, "need |m| <= l")
        return f"harmonic:{l}:{m}"
    raise ConfigError(name, f"expected 'constant:<c>' or 'harmonic:<l>:<m>', got {v!r}")


def _choice(options):
    def f(name, v):
        if v not in options:
            raise ConfigError(name, f"expected one of {list(options)}, got {v!r}")
        return v
    return f


def _opt(conv):
    return lambda name, v: None if v is None else conv(name, v)


PARAMS = {
    "green": {"r": (lambda n, v: _float(n, v, 0.0, True), REQUIRED)},
    "heat-check": {"D": (lambda n, v: _float(n, v, 4.0, True), 8.0),
                   "t_min": (lambda n, v: _float(n, v, 1e-3), 1e-3),
                   "t_max": (lambda n, v: _float(n, v, 0.0, True), 100.0),
                   "n_t": (_int, 121),
                   "r_max": (lambda n, v: _float(n, v, 0.0), 50.0),
                   "n_r": (_int, 201)},
    "tail": {"t": (lambda n, v: _float(n, v, 0.0, True), REQUIRED),
             "R_grid": (lambda n, v: _flist(n, v, 0.0), REQUIRED)},
    "survival": {"r0": (lambda n, v: _float(n, v, 0.0), 0.0),
                 "t_grid": (lambda n, v: _flist(n, v, 0.0), REQUIRED),
                 "min_t": (lambda n, v: _float(n, v, 0.0, True), 0.01),
                 "n_paths": (_opt(_int), None),
                 "dt": (lambda n, v: _float(n, v, 0.0, True), 1e-4)},
    "exit-sim": {"r0": (lambda n, v: _float(n, v, 0.0), 0.0),
                 "n_paths": (_int, REQUIRED),
                 "dt": (lambda n, v: _float(n, v, 0.0, True), 1e-4),
                 "boundary_tol": (lambda n, v: _float(n, v, 0.0, True), 1e-6),
                 "max_time": (lambda n, v: _float(n, v, 0.0, True), 1e3),
                 "sampler": (_choice(("radial", "walk")), "radial"),
                 "walk_steps": (_choice(("gaussian", "sphere")), "gaussian"),
                 "direction": (_opt(_flist), None)},
    "eigenfunction": {"x": (lambda n, v: _float(n, v, 0.0), 0.0),
                      "direction": (_opt(_flist), None),
                      "lambda": (_lam, REQUIRED),
                      "phi": (_phi, "constant:1.0"),
                      "n_paths": (_int, REQUIRED),
                      "dt": (lambda n, v: _float(n, v, 0.0, True), 1e-4)},
    "spectrum": {"k_max": (_int, 5)},
    "boundary-probe": {"lambda": (_lam, REQUIRED),
                       "phi": (_phi, "constant:1.0"),
                       "deltas": (lambda n, v: _flist(n, v, 0.0, True), [0.2, 0.1, 0.05, 0.02]),
                       "n_paths": (_int, REQUIRED),
                       "dt": (lambda n, v: _float(n, v, 0.0, True), 1e-4)},
    "transience": {"T_grid": (lambda n, v: _flist(n, v, 0.0), [5.0, 10.0, 20.0]),
                   "n_paths": (_int, REQUIRED),
                   "dt": (lambda n, v: _float(n, v, 0.0, True), 4e-3),
                   "max_time": (lambda n, v: _float(n, v, 0.0, True), 1e3)},
    "verify-all": {"checks": (_ilist, list(range(1, 12)))},
}


@dataclass
class RunConfig:
    """Validated, fully resolved run configuration."""

    space: str
    task: str
    params: dict
    R: float | None = None
    seed: int | None = None
    output: dict = field(default_factory=lambda: {"path": None, "format": "json"})

    def to_dict(self) -> dict:
        return {"space": self.space, "task": self.task,
                "domain": None if self.R is None else {"ball": {"R": self.R}},
                "params": dict(self.params), "seed": self.seed, "output": dict(self.output)}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def parse_config(d: dict) -> RunConfig:
    """Validate a configuration mapping; raises :class:`ConfigError` naming the field."""
    if not isinstance(d, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    unknown = set(d) - {"space", "task", "domain", "params", "seed", "output"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    task = d.get("task")
    if task not in TASKS:
        raise ConfigError("task", f"unknown task {task!r}; expected one of: {', '.join(TASKS)}")
    key = d.get("space", "h3")
    try:
        space = space_from_key(str(key))
    except DomainError as e:
        raise ConfigError("space", str(e)) from None

    R = None
    dom = d.get("domain")
    if dom is not None:
        if not isinstance(dom, dict) or not isinstance(dom.get("ball"), dict) or "R" not in dom["ball"]:
            raise ConfigError("domain", "expected {\"ball\": {\"R\": <radius>}}")
        R = _float("domain.ball.R", dom["ball"]["R"], 0.0, True)
    if task in NEEDS_BALL and R is None:
        raise ConfigError("domain.ball.R", f"task {task} needs a ball radius")

    seed = d.get("seed")
    if task in RANDOMIZED or (task == "survival" and (d.get("params") or {}).get("n_paths") is not None):
        if seed is None:
            raise ConfigError("seed", f"task {task} is randomized and needs an explicit seed")
    if seed is not None:
        seed = _int("seed", seed, lo=0)
        if seed >= 2**64:
            raise ConfigError("seed", "must fit in 64 bits")

    raw = d.get("params") or {}
    if not isinstance(raw, dict):
        raise ConfigError("params", "expected an object")
    spec = PARAMS[task]
    extra = set(raw) - set(spec)
    if extra:
        raise ConfigError(f"params.{sorted(extra)[0]}", f"not a parameter of task {task}")
    params = {}
    for name, (conv, default) in spec.items():
        if name in raw:
            params[name] = conv(f"params.{name}", raw[name])
        elif default is REQUIRED:
            raise ConfigError(f"params.{name}", "required")
        else:
            params[name] = default

    out = d.get("output") or {}
    if not isinstance(out, dict):
        raise ConfigError("output", "expected {\"path\": ..., \"format\": \"json\"|\"csv\"}")
    fmt = out.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError("output.format", f"expected 'json' or 'csv', got {fmt!r}")
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("output.path", "expected a string")

    cfg = RunConfig(space.key, task, params, R, seed, {"path": path, "format": fmt})
    _check_preconditions(cfg, space)
    return cfg


def _check_preconditions(cfg: RunConfig, space) -> None:
    p, R = cfg.params, cfg.R
    if "dt" in p and R is not None and p["dt"] > 1e-2 * R * R:
        raise ConfigError("params.dt", f"must be <= 1e-2 R^2 = {1e-2 * R * R:g}")
    for name in ("r0", "x"):
        if name in p and R is not None and not p[name] < R:
            raise ConfigError(f"params.{name}", f"start must lie inside the ball (< {R})")
    if "lambda" in p:
        if not p["lambda"][0] > space.lambda1:
            raise ConfigError("params.lambda",
                              f"Re(lambda)={p['lambda'][0]:g} violates the hypothesis Re lambda > lambda1 "
                              f"= -rho^2 = {space.lambda1:g}")
    if p.get("phi", "constant").startswith("harmonic"):
        if not space.has_full_walk:
            raise ConfigError("params.phi", f"non-constant boundary data is unsupported on {space.key}")
        l, m = map(int, p["phi"].split(":")[1:])
        if space.n == 2 and m not in (0, -1, 1) and l:
            raise ConfigError("params.phi", "on H^2 use m = 0 (cosine) or m = -1 (sine)")
    if cfg.task == "exit-sim" and p["sampler"] == "walk" and not space.has_full_walk:
        raise ConfigError("params.sampler", f"full walks are only implemented on H^2 and H^3, not {space.key}")
    if p.get("direction") is not None and len(p["direction"]) != space.n:
        raise ConfigError("params.direction", f"needs {space.n} components")
    if "deltas" in p:
        d = p["deltas"]
        if any(b >= a for a, b in zip(d, d[1:])) or max(d) >= R:
            raise ConfigError("params.deltas", f"must be strictly decreasing and inside (0, {R})")
    if cfg.task == "heat-check":
        if space.key != "h3":
            raise ConfigError("space", "heat-check uses the closed-form kernel and needs h3")
        if p["t_max"] > 100 or p["t_min"] >= p["t_max"] or p["r_max"] > 50:
            raise ConfigError("params", "grid must lie in t in [1e-3, 100], r in [0, 50]")
    if cfg.task == "tail" and space.key != "h3":
        raise ConfigError("space", "tail uses the closed-form kernel and needs h3")
    if cfg.task == "transience" and max(p["T_grid"]) > p["max_time"]:
        raise ConfigError("params.T_grid", "exceeds max_time")
    if cfg.task == "transience" and any(b < a for a, b in zip(p["T_grid"], p["T_grid"][1:])):
        raise ConfigError("params.T_grid", "must be non-decreasing")
    if cfg.task == "spectrum":
        from .dirichlet_oracle import MAX_MODES
        if p["k_max"] > MAX_MODES:
            raise ConfigError("params.k_max", f"at most {MAX_MODES} modes are resolved")
    if cfg.task == "verify-all" and any(not 1 <= k <= 11 for k in p["checks"]):
        raise ConfigError("params.checks", "checks are numbered 1 to 11")


# ------------------------------------------------------------- execution


def _boundary(spec: str, space):
    from .eigenfun import BoundaryData
    kind, *rest = spec.split(":")
    if kind == "constant":
        return BoundaryData.constant(float(rest[0]))
    l, m = int(rest[0]), int(rest[1])
    return BoundaryData.spherical_harmonic(l, m, dim=space.n - 1)


def _sim_config(cfg: RunConfig, **extra):
    from .sde_sim import SimConfig
    p = cfg.params
    kw = {k: p[k] for k in ("dt", "boundary_tol", "max_time") if k in p}
    kw.update(extra)
    return SimConfig(seed=cfg.seed, n_paths=p["n_paths"], **kw)


def execute(cfg: RunConfig, out_dir: Path | None = None) -> tuple[dict, object]:
    """Run a validated configuration; returns (result, optional exit batch)."""
    import numpy as np

    space = space_from_key(cfg.space)
    p, R, task = cfg.params, cfg.R, cfg.task
    batch = None
    if task == "green":
        from .kernels import green_kernel
        q = green_kernel(space, p["r"])
        res = {"r": p["r"], "value": q.value, "abs_error_estimate": q.abs_error_estimate,
               "evaluations": q.evaluations}
    elif task == "heat-check":
        from .kernels import check_heat_bounds, fit_bound_constants
        tg = np.geomspace(p["t_min"], p["t_max"], p["n_t"])
        rg = np.linspace(0.0, p["r_max"], p["n_r"])
        consts = fit_bound_constants(tg, rg, D=p["D"], space=space)
        res = {"constants": consts.as_dict(), **check_heat_bounds(consts, tg, rg, space)}
        res.setdefault("large_t_ok", True)
    elif task == "tail":
        from .kernels import heat_tail_mass
        rows = []
        for Rv in p["R_grid"]:
            q = heat_tail_mass(p["t"], Rv, space)
            rows.append({"R": Rv, "value": q.value, "abs_error_estimate": q.abs_error_estimate})
        res = {"t": p["t"], "rows": rows}
    elif task == "survival":
        from .dirichlet_oracle import survival
        from .errors import SeriesUnavailable
        from .sde_sim import empirical_survival, sample_radial_exit
        rows = []
        for t in p["t_grid"]:
            try:
                val = survival(space, R, p["r0"], t, min_t=p["min_t"])
            except SeriesUnavailable:
                val = None
            rows.append({"t": t, "oracle": val})
        if p["n_paths"]:
            batch = sample_radial_exit(space, R, p["r0"], _sim_config(cfg))
            emp, se = empirical_survival(batch, p["t_grid"])
            for row, e, s in zip(rows, emp, se):
                row.update(empirical=float(e), se=float(s))
        res = {"r0": p["r0"], "rows": rows}
    elif task == "exit-sim":
        from .dirichlet_oracle import mean_exit_time
        from .sde_sim import sample_full_exit, sample_radial_exit
        sc = _sim_config(cfg)
        if p["sampler"] == "radial":
            batch = sample_radial_exit(space, R, p["r0"], sc)
        else:
            start = p["r0"] if p["direction"] is None else (p["r0"], p["direction"])
            batch = sample_full_exit(space, R, start, sc, steps=p["walk_steps"])
        tau = batch.tau
        res = {"n_paths": len(batch), "mean_tau": float(np.mean(tau)),
               "stderr_tau": float(np.std(tau, ddof=1) / math.sqrt(len(tau))) if len(tau) > 1 else 0.0,
               "mean_tau_oracle": mean_exit_time(space, R, p["r0"]), "samples_file": None}
    elif task == "eigenfunction":
        from .dirichlet_oracle import radial_bvp
        from .eigenfun import estimate_psi
        phi = _boundary(p["phi"], space)
        lam = complex(*p["lambda"])
        x = p["x"] if p["direction"] is None else (p["x"], tuple(p["direction"]))
        est = estimate_psi(space, R, x, lam, phi, p["n_paths"], cfg.seed, _sim_config(cfg))
        if phi.is_constant:
            est.oracle_value = complex(radial_bvp(space, R, lam, phi.value)(p["x"]))
        res = est.to_dict(cfg.to_dict())
    elif task == "spectrum":
        from .dirichlet_oracle import dirichlet_eigenvalues
        res = {"R": R, "eigenvalues": [float(v) for v in dirichlet_eigenvalues(space, R, p["k_max"])],
               "lambda1": space.lambda1}
    elif task == "boundary-probe":
        from .eigenfun import boundary_convergence_probe, probe_is_converging
        phi = _boundary(p["phi"], space)
        rows = boundary_convergence_probe(space, R, complex(*p["lambda"]), phi, p["deltas"], p["n_paths"],
                                          cfg.seed, _sim_config(cfg))
        res = {"rows": [{"delta": r.delta, "error": r.error, "error_se": r.error_se,
                         "oracle_error": r.oracle_error, "estimate": r.estimate.to_dict()} for r in rows],
               "converging": probe_is_converging(rows, phi.sup), "sup_phi": phi.sup}
    elif task == "transience":
        from .sde_sim import transience_probe
        rows = transience_probe(space, p["T_grid"], _sim_config(cfg))
        res = {"two_rho": 2 * space.rho,
               "rows": [{"T": r.T, "mean_distance": r.mean_distance, "stderr": r.stderr,
                         "frac_beyond": {str(k): v for k, v in r.frac_beyond.items()}} for r in rows]}
    elif task == "verify-all":
        from .verify import run_all
        res = run_all(cfg.seed, p["checks"], echo=lambda s: print(s, file=sys.stderr))
    else:  # pragma: no cover - guarded by parse_config
        raise ConfigError("task", task)
    return res, batch


def _flatten(row: dict, prefix="") -> dict:
    out = {}
    for k, v in row.items():
        if isinstance(v, dict):
            out.update(_flatten(v, f"{prefix}{k}."))
        elif isinstance(v, (list, tuple)):
            for i, x in enumerate(v):
                out[f"{prefix}{k}[{i}]"] = x
        else:
            out[f"{prefix}{k}"] = v
    return out


def render(cfg: RunConfig, result: dict, fmt: str) -> str:
    """Output text: JSON envelope, or CSV with a '#' line holding config and version."""
    envelope = {"tool": f"harmexit {__version__}", "config": cfg.to_dict(), "result": result}
    if fmt == "json":
        return json.dumps(envelope, indent=2, default=_json_default) + "\n"
    rows = result.get("rows") if isinstance(result.get("rows"), list) else [result]
    flat = [_flatten(r) for r in rows]
    header = list(dict.fromkeys(k for r in flat for k in r))
    buf = io.StringIO()
    buf.write("# " + json.dumps({"tool": envelope["tool"], "config": envelope["config"]}, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in flat:
        w.writerow(["" if r.get(k) is None else (repr(r[k]) if isinstance(r[k], float) else r[k]) for k in header])
    return buf.getvalue()


def _json_default(o):
    import numpy as np
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o))


def resolve_output(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def run_config(cfg: RunConfig, threads: int | None = None, stdout=None) -> int:
    """Execute and write outputs; returns the process exit status."""
    from .sde_sim import set_threads

    stdout = stdout or sys.stdout
    set_threads(threads if threads is not None else os.cpu_count())
    try:
        result, batch = execute(cfg)
    except HarmexitError as e:
        report = {"tool": f"harmexit {__version__}", "config": cfg.to_dict(),
                  "error": {"type": type(e).__name__, "message": str(e)}}
        print(json.dumps(report, indent=2), file=stdout)
        return 1
    out = resolve_output(cfg.output["path"])
    fmt = cfg.output["format"]
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        if batch is not None and cfg.task == "exit-sim":
            samples = out.with_name(out.stem + ".samples.csv")
            batch.provenance = {**batch.provenance, "run_config": cfg.to_dict()}
            batch.to_csv(samples)
            result["samples_file"] = str(samples)
        text = render(cfg, result, fmt)
        out.write_text(text)
        if fmt == "json":
            print(text, end="", file=stdout)
        else:
            print(str(out), file=stdout)
    else:
        print(render(cfg, result, fmt), end="", file=stdout)
    if cfg.task == "verify-all" and not result["all_passed"]:
        return 1
    return 0


# ------------------------------------------------------------------ argparse


def _add_common(sp, randomized=False, ball=False):
    sp.add_argument("--space", default="h3", help="h2, h3, hn:<n> or dr:<p>:<q>")
    if ball:
        sp.add_argument("--R", type=float, required=True, help="ball radius")
    sp.add_argument("--seed", type=int, required=randomized, default=None,
                    help="64-bit seed (mandatory for randomized tasks)")
    sp.add_argument("--threads", type=int, default=None, help="worker threads (default: logical cores)")
    sp.add_argument("--output", default=None, help=f"output file (relative paths go under ${OUTPUT_DIR_ENV})")
    sp.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="harmexit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"harmexit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    sp = sub.add_parser("green", help="Green kernel by quadrature")
    _add_common(sp)
    sp.add_argument("--r", type=float, required=True)

    sp = sub.add_parser("heat-check", help="fit and re-check heat kernel bound constants (H^3)")
    _add_common(sp)
    sp.add_argument("--D", type=float, default=8.0)
    sp.add_argument("--t-min", type=float, default=1e-3)
    sp.add_argument("--t-max", type=float, default=100.0)
    sp.add_argument("--n-t", type=int, default=121)
    sp.add_argument("--r-max", type=float, default=50.0)
    sp.add_argument("--n-r", type=int, default=201)

    sp = sub.add_parser("tail", help="heat mass outside balls (H^3)")
    _add_common(sp)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--R-grid", type=float, nargs="+", required=True)

    sp = sub.add_parser("survival", help="spectral survival function, optionally with Monte Carlo")
    _add_common(sp, ball=True)
    sp.add_argument("--r0", type=float, default=0.0)
    sp.add_argument("--t-grid", type=float, nargs="+", required=True)
    sp.add_argument("--min-t", type=float, default=0.01)
    sp.add_argument("--n-paths", type=int, default=None)
    sp.add_argument("--dt", type=float, default=1e-4)

    sp = sub.add_parser("exit-sim", help="simulate exit times (and points)")
    _add_common(sp, randomized=True, ball=True)
    sp.add_argument("--r0", type=float, default=0.0)
    sp.add_argument("--n-paths", type=int, required=True)
    sp.add_argument("--dt", type=float, default=1e-4)
    sp.add_argument("--boundary-tol", type=float, default=1e-6)
    sp.add_argument("--max-time", type=float, default=1e3)
    sp.add_argument("--sampler", choices=("radial", "walk"), default="radial")
    sp.add_argument("--walk-steps", choices=("gaussian", "sphere"), default="gaussian")
    sp.add_argument("--direction", type=float, nargs="+", default=None)

    sp = sub.add_parser("eigenfunction", help="Monte Carlo estimate of E_x[exp(-lambda tau) phi(B_tau)]")
    _add_common(sp, randomized=True, ball=True)
    sp.add_argument("--x", type=float, default=0.0, help="start radius")
    sp.add_argument("--direction", type=float, nargs="+", default=None)
    sp.add_argument("--lambda", dest="lam", type=float, nargs=2, metavar=("RE", "IM"), required=True)
    sp.add_argument("--phi", default="constant:1.0", help="constant:<c> or harmonic:<l>:<m>")
    sp.add_argument("--n-paths", type=int, required=True)
    sp.add_argument("--dt", type=float, default=1e-4)

    sp = sub.add_parser("spectrum", help="Dirichlet eigenvalues of a ball")
    _add_common(sp, ball=True)
    sp.add_argument("--k-max", type=int, default=5)

    sp = sub.add_parser("boundary-probe", help="error |psi(x_delta) - phi(z)| approaching the boundary")
    _add_common(sp, randomized=True, ball=True)
    sp.add_argument("--lambda", dest="lam", type=float, nargs=2, metavar=("RE", "IM"), required=True)
    sp.add_argument("--phi", default="constant:1.0")
    sp.add_argument("--deltas", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.02])
    sp.add_argument("--n-paths", type=int, required=True)
    sp.add_argument("--dt", type=float, default=1e-4)

    sp = sub.add_parser("transience", help="distance from the start of free Brownian motion")
    _add_common(sp, randomized=True)
    sp.add_argument("--T-grid", type=float, nargs="+", default=[5.0, 10.0, 20.0])
    sp.add_argument("--n-paths", type=int, required=True)
    sp.add_argument("--dt", type=float, default=4e-3)
    sp.add_argument("--max-time", type=float, default=1e3)

    sp = sub.add_parser("verify-all", help="run the acceptance checks")
    _add_common(sp, randomized=True)
    sp.add_argument("--checks", type=int, nargs="+", default=list(range(1, 12)))

    sp = sub.add_parser("run", help="run a JSON configuration file")
    sp.add_argument("config")
    sp.add_argument("--threads", type=int, default=None)

    sub.add_parser("schema", help="print the JSON schema of all outputs")
    return ap


_ARG_NAMES = {"lam": "lambda"}


def config_from_args(ns: argparse.Namespace) -> dict:
    task = ns.command
    skip = {"command", "space", "R", "seed", "threads", "output", "format"}
    params = {_ARG_NAMES.get(k, k): v for k, v in vars(ns).items() if k not in skip}
    d = {"space": ns.space, "task": task, "params": params, "seed": ns.seed,
         "output": {"path": ns.output, "format": ns.format}}
    if getattr(ns, "R", None) is not None:
        d["domain"] = {"ball": {"R": ns.R}}
    return d


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    if ns.command == "schema":
        from .schema import report_schema
        print(json.dumps(report_schema(), indent=2))
        return 0
    try:
        if ns.command == "run":
            try:
                raw = json.loads(Path(ns.config).read_text())
            except OSError as e:
                raise ConfigError("<file>", str(e)) from None
            except json.JSONDecodeError as e:
                raise ConfigError("<file>", f"invalid JSON: {e}") from None
        else:
            raw = config_from_args(ns)
        cfg = parse_config(raw)
    except ConfigError as e:
        print(f"harmexit: invalid configuration: {e}", file=sys.stderr)
        return 2
    return run_config(cfg, ns.threads)


if __name__ == "__main__":
    sys.exit(main())
