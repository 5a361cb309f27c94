"""Command-line driver: ``conex <task> --config file.json [--out dir] [--threads N]``.

Exit status: 0 on success, 2 when a verification check fails, 1 on error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Optional

import numpy as np
import scipy

from . import __version__
from .config import TASKS, ConfigError, build_config
from .io import read_csv, write_csv, write_json

EXIT_OK, EXIT_ERROR, EXIT_VERIFY = 0, 1, 2

# flag -> config key
OVERRIDES = {
    "mu": float, "alpha": float, "M": float, "n": int, "k": int, "grid": int,
    "grid_r": int, "grid_t": int, "mode": str, "modes": int, "cutoff": float,
}


class TaskResult:
    def __init__(self, outputs, summary, tables=None, passed=True):
        self.outputs = list(outputs)
        self.summary = summary
        self.tables = tables or {}
        self.passed = passed


# -- tasks -------------------------------------------------------------------------


def _task_profile(cfg, out: Path, threads: int) -> TaskResult:
    from .grid import Grid1D
    from .profile import ConeSpec, solve_profile

    cone = ConeSpec(n=cfg.n, k=2, alpha=cfg.alpha, M=cfg.M)
    sol = solve_profile(cone, Grid1D(0.0, cfg.alpha, cfg.grid), tol=cfg.tol, fit_window=cfg.fit_window)
    outputs = sol.save(out)
    return TaskResult(outputs, {"sigma": sol.sigma, "residual": sol.residual,
                                "iterations": sol.iterations})


def _spectral_operator(cfg, grid):
    from .profile import ConeSpec, defining_function, solve_profile
    from .spectral import kappa_operator, liouville_operator, profile_operator

    if cfg.mu is not None:
        return liouville_operator(cfg.mu, grid)
    if cfg.n is not None:
        return profile_operator(solve_profile(ConeSpec(n=cfg.n, alpha=cfg.alpha), grid))
    return kappa_operator(cfg.kappa, grid, lambda t: defining_function(t, cfg.alpha)[0])


def _task_spectrum(cfg, out: Path, threads: int) -> TaskResult:
    from .grid import Grid1D
    from .spectral import solve_spectrum, verify_growth

    length = cfg.mu * math.pi if cfg.mu is not None else cfg.alpha
    grid = Grid1D(0.0, length, cfg.grid)
    spec = solve_spectrum(_spectral_operator(cfg, grid), cfg.modes, extrapolate=cfg.extrapolate)
    outputs = spec.save(out)
    growth = verify_growth(spec)
    outputs.append(write_json(out / "growth.json", growth))
    table = [{"index": i + 1, "lambda_h": float(spec.lambdas[i]),
              "lambda_extrapolated": (float(spec.lambdas_extrapolated[i])
                                      if spec.lambdas_extrapolated is not None else None)}
             for i in range(len(spec))]
    return TaskResult(outputs, {"lambdas": spec.best_lambdas, "min_ratio": growth["min_ratio"]},
                      {"spectrum": table})


def _task_indices(cfg, out: Path, threads: int) -> TaskResult:
    from .indexset import exponent_monoid, j_closure, log_multiplicities
    from .indicial import indicial_roots

    if cfg.mbars is not None:
        mbars = sorted(float(m) for m in cfg.mbars)
    else:
        mbars = sorted(indicial_roots(cfg.k, float(l)).m_plus for l in cfg.lambdas)
    I = exponent_monoid(cfg.n, mbars, cfg.cutoff, cfg.exp_tol)
    J = j_closure(mbars, cfg.n, cfg.k, cfg.cutoff, l_min=cfg.l_min, exp_tol=cfg.exp_tol)
    N = log_multiplicities(I, mbars, cfg.n, cfg.k)
    doc = {"I": I.to_list(), "J": J.to_list(), "mbars": mbars,
           "N_tilde": [{"a": a, "N": N[a]} for a in I.elements]}
    path = write_json(out / "indices.json", doc)
    print(f"I = {[_short(a) for a in I.elements]}")
    print(f"J = {[_short(a) for a in J.elements]}")
    print("a\tN~_a")
    for a in I.elements:
        print(f"{_short(a)}\t{N[a]}")
    return TaskResult([path], {"I": I.to_list(), "J": J.to_list()})


def _short(a: float) -> str:
    return f"{a:.10g}"


def _task_radial(cfg, out: Path, threads: int) -> TaskResult:
    from .indicial import (RadialMode, euler_operator, indicial_roots, particular_poly_log,
                           radial_grid, solve_radial_ode)
    from .series import PolyLogSeries

    r0 = cfg.r0 if cfg.r0 is not None else cfg.M / 2.0
    series = None
    if cfg.forcing_csv is not None:
        data = read_csv(Path(cfg.forcing_csv))
        r, forcing = data["r"], data["F"]
    else:
        r = radial_grid(r0, cfg.decades, cfg.per_decade)
        series = PolyLogSeries.from_dict(cfg.forcing) if cfg.forcing is not None else None
        forcing = series
    mode = RadialMode(lam=cfg.lam, k=cfg.k, r0=r0, A_at_r0=cfg.A0, r=r, forcing=forcing)
    A = solve_radial_ode(mode)
    pair = indicial_roots(cfg.k, cfg.lam)
    F = mode.forcing_samples()
    ri, LA = euler_operator(r, A, cfg.k, cfg.lam)
    scale = max(float(np.max(np.abs(F[2:-2]))), 1e-300)
    summary: dict[str, Any] = {"m_plus": pair.m_plus, "m_minus": pair.m_minus,
                               "operator_check": float(np.max(np.abs(LA - F[2:-2]))) / scale}
    if series is not None:
        P = particular_poly_log(cfg.k, cfg.lam, series)
        exact = P(r) + (cfg.A0 - P(r0)) * (r / r0) ** pair.m_plus
        summary["closed_form_error"] = float(np.max(np.abs(A - exact)) / max(np.max(np.abs(exact)), 1e-300))
        summary["particular"] = P.to_dict()
    path = write_csv(out / "radial.csv", ["r", "A"], zip(r, A))
    return TaskResult([path, write_json(out / "radial.json", summary)], summary)


def _simulate_one(cfg, n_r: int, n_t: int):
    from .liouville import SectorSpec, sector_error, solve_sector

    spec = SectorSpec(mu=cfg.mu, M=cfg.M, n_r=n_r, n_theta=n_t, r_min_ratio=cfg.r_min_ratio)
    trace = None
    if cfg.mode == "trace":
        trace = lambda th: cfg.trace_eps * np.sin(th / cfg.mu) ** 2  # noqa: E731
    fld = solve_sector(spec, cfg.mode, trace)
    err = sector_error(fld) if cfg.mode == "blowup" else None
    return fld, err


def _task_simulate(cfg, out: Path, threads: int) -> TaskResult:
    from .spectral import liouville_operator, solve_spectrum
    from .liouville import project_modes

    fld, err = _simulate_one(cfg, cfg.grid_r, cfg.grid_t)
    outputs = [fld.save(out)]
    basis = solve_spectrum(liouville_operator(cfg.mu, fld.spec.theta_grid()), min(cfg.modes, cfg.grid_t // 8))
    outputs.append(project_modes(fld, basis, len(basis)).save(out))
    summary = {"residual": fld.residual, "iterations": fld.iterations, "mode": cfg.mode,
               "oracle_error": err}
    tables = {}
    if cfg.refine:
        levels = [(cfg.grid_r * 2**j, cfg.grid_t * 2**j) for j in range(cfg.refine + 1)]
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            runs = list(pool.map(lambda lv: _simulate_one(cfg, *lv), levels))
        rows = []
        for j, ((nr, nt), (f, e)) in enumerate(zip(levels, runs)):
            prev = runs[j - 1][1] if j else None
            rows.append({"grid_r": nr, "grid_t": nt, "residual": f.residual, "oracle_error": e,
                         "ratio": (prev / e) if (prev is not None and e) else None})
        tables["refinement"] = rows
        outputs.append(write_json(out / "refinement.json", rows))
    outputs.append(write_json(out / "simulate.json", summary))
    return TaskResult(outputs, summary, tables)


def _oracle_radii(cfg) -> np.ndarray:
    return cfg.M * np.exp(np.linspace(math.log(cfg.r_min_ratio), math.log(cfg.r_max_ratio), cfg.grid_r + 1))


def _task_oracle(cfg, out: Path, threads: int) -> TaskResult:
    from .liouville import SectorSpec, oracle_field

    spec = SectorSpec(mu=cfg.mu, M=cfg.M, n_r=cfg.grid_r, n_theta=cfg.grid_t, r_min_ratio=cfg.r_min_ratio)
    fld = oracle_field(spec, _oracle_radii(cfg))
    path = fld.save(out)
    meta = write_json(out / "oracle.json", {"mu": cfg.mu, "M": cfg.M, "grid_r": cfg.grid_r,
                                            "grid_t": cfg.grid_t, "r_min_ratio": cfg.r_min_ratio,
                                            "r_max_ratio": cfg.r_max_ratio})
    return TaskResult([path, meta], {"points": int(fld.v.size), "v_max": float(np.max(fld.v))})


def load_field(path: Path, mu: float, M: float):
    """Read a field CSV (r, theta, u, u_T, v) back into a SectorField."""
    from .liouville import SectorField, SectorSpec

    data = read_csv(path)
    r = np.unique(data["r"])
    theta = np.unique(data["theta"])
    if r.size * theta.size != data["r"].size:
        raise ValueError(f"{path} is not a tensor-product polar grid")
    order = np.lexsort((data["theta"], data["r"]))
    v = data["v"][order].reshape(r.size, theta.size)
    spec = SectorSpec(mu=mu, M=M, n_r=max(16, r.size - 1), n_theta=theta.size,
                      r_min_ratio=min(0.49, r[0] / M))
    if not np.allclose(spec.theta_grid().nodes, theta, rtol=0, atol=1e-12):
        raise ValueError("field theta grid is not the cell-centered grid of the sector")
    return SectorField(spec=spec, r=r, theta=theta, v=v, boundary_mode="file", arc_trace=v[-1].copy())


def _task_verify(cfg, out: Path, threads: int) -> TaskResult:
    from .liouville import SectorSpec, oracle_field
    from .pipeline import verify_field

    if cfg.field is not None:
        fld = load_field(Path(cfg.field), cfg.mu, cfg.M)
    else:
        spec = SectorSpec(mu=cfg.mu, M=cfg.M, n_r=cfg.grid_r, n_theta=cfg.grid_t,
                          r_min_ratio=cfg.r_min_ratio)
        fld = oracle_field(spec, _oracle_radii(cfg))
    rep = verify_field(fld, window=cfg.window, fit_window=cfg.fit_window, modes=cfg.modes,
                       exponent_rtol=cfg.exponent_rtol, decay_rtol=cfg.decay_rtol, eps_min=cfg.eps_min)
    proj = rep.pop("projection")
    outputs = [proj.save(out), write_json(out / "verify.json", rep)]
    for name, chk in rep["checks"].items():
        print(f"{'PASS' if chk['passed'] else 'FAIL'} {name}: {chk}")
    return TaskResult(outputs, {"passed": rep["passed"], "checks": rep["checks"]}, passed=rep["passed"])


RUNNERS = {
    "profile": _task_profile,
    "spectrum": _task_spectrum,
    "indices": _task_indices,
    "radial": _task_radial,
    "simulate": _task_simulate,
    "oracle": _task_oracle,
    "verify": _task_verify,
}


# -- plot scripts ------------------------------------------------------------------

_PLOT_HEAD = "import csv\nimport matplotlib.pyplot as plt\n\n" \
             "def load(name):\n    with open(name, newline='') as fh:\n" \
             "        rows = list(csv.reader(fh))\n" \
             "    return rows[0], [[float(x) for x in row] for row in rows[1:] if row]\n\n"

_PLOTS = {
    "spectrum.csv": ("plot_spectrum.py",
                     "head, rows = load('spectrum.csv')\n"
                     "i = [r[0] for r in rows]\n"
                     "plt.plot(i, [r[2] if r[2] == r[2] else r[1] for r in rows], 'o', label='computed')\n"
                     "plt.plot(i, [4 * (k + 1) ** 2 for k in i], '-', label='4(i+1)^2 (quadrant)')\n"
                     "plt.xlabel('i'); plt.ylabel('lambda_i'); plt.legend(); plt.savefig('spectrum.png')\n"),
    "field.csv": ("plot_field.py",
                  "import numpy as np\n"
                  "head, rows = load('field.csv')\n"
                  "a = np.array(rows)\n"
                  "r, t = np.unique(a[:, 0]), np.unique(a[:, 1])\n"
                  "v = a[:, 4].reshape(r.size, t.size)\n"
                  "plt.pcolormesh(t, np.log10(r), v, shading='auto'); plt.colorbar(label='v')\n"
                  "plt.xlabel('theta'); plt.ylabel('log10 r'); plt.savefig('field.png')\n"),
    "modes.csv": ("plot_modes.py",
                  "head, rows = load('modes.csv')\n"
                  "for j in range(1, len(head)):\n"
                  "    pts = [(r[0], abs(r[j])) for r in rows if r[j] != 0]\n"
                  "    plt.loglog([p[0] for p in pts], [p[1] for p in pts], label=head[j])\n"
                  "plt.xlabel('r'); plt.ylabel('|A_i(r)|'); plt.legend(); plt.savefig('modes.png')\n"),
    "radial.csv": ("plot_radial.py",
                   "head, rows = load('radial.csv')\n"
                   "plt.semilogx([r[0] for r in rows], [r[1] for r in rows])\n"
                   "plt.xlabel('r'); plt.ylabel('A(r)'); plt.savefig('radial.png')\n"),
    "profile.csv": ("plot_profile.py",
                    "head, rows = load('profile.csv')\n"
                    "th = [r[0] for r in rows]\n"
                    "plt.plot(th, [r[2] for r in rows], label='w')\n"
                    "plt.xlabel('theta'); plt.legend(); plt.savefig('profile.png')\n"),
}


def emit_plots(run_dir: Path) -> list[Path]:
    """Write matplotlib scripts next to the CSVs of a run directory."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise FileNotFoundError(f"no run directory {run_dir}")
    written = []
    for csv_name, (script, body) in sorted(_PLOTS.items()):
        if (run_dir / csv_name).exists():
            path = run_dir / script
            path.write_text(_PLOT_HEAD + body, encoding="utf-8")
            written.append(path)
    if not written:
        raise FileNotFoundError(f"no plottable CSVs in {run_dir}")
    return written


# -- driver -----------------------------------------------------------------------


def _versions() -> dict:
    return {"conex": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _output_dir(task: str, cli_out: Optional[str], cfg_out: Optional[str]) -> Path:
    if cli_out:
        return Path(cli_out)
    root = os.environ.get("CONEX_OUT")
    if root:
        return Path(root) / task
    if cfg_out:
        return Path(cfg_out)
    return Path("conex_out") / task


def run(raw: dict, out: Optional[str] = None, threads: int = 1) -> int:
    """Run one task from a config dictionary (or a previous run's manifest)."""
    if isinstance(raw, dict) and "config" in raw and "versions" in raw:
        raw = raw["config"]
    cfg = build_config(dict(raw))
    out_dir = _output_dir(cfg.task, out, cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    result = RUNNERS[cfg.task](cfg, out_dir, threads)
    elapsed = time.perf_counter() - t0
    manifest = {
        "config": cfg.to_dict(),
        "versions": _versions(),
        "timings": {"total_seconds": elapsed},
        "outputs": sorted(p.name for p in result.outputs),
        "summary": result.summary,
        "tables": result.tables,
        "passed": result.passed,
    }
    write_json(out_dir / "manifest.json", manifest)
    print(f"{cfg.task}: wrote {len(result.outputs)} files to {out_dir}")
    return EXIT_OK if result.passed else EXIT_VERIFY


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conex", description=__doc__.splitlines()[0])
    p.add_argument("task", help=f"one of {sorted(TASKS)}, 'run' (task from the config) or 'plots'")
    p.add_argument("--config", help="JSON config or a manifest.json from an earlier run")
    p.add_argument("--out", help="output directory")
    p.add_argument("--run", help="run directory for the 'plots' task")
    p.add_argument("--threads", type=int, default=1)
    for name, typ in OVERRIDES.items():
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ, default=None)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        if args.task == "plots":
            target = args.run or args.out
            if not target:
                raise ConfigError("plots needs --run DIR")
            for path in emit_plots(Path(target)):
                print(path)
            return EXIT_OK
        raw: dict[str, Any] = {}
        if args.config:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
            if "config" in raw and "versions" in raw:
                raw = raw["config"]
        if args.task != "run":
            if args.task not in TASKS:
                raise ConfigError(f"unknown task {args.task!r}")
            if raw.get("task", args.task) != args.task:
                raise ConfigError(f"config task {raw.get('task')!r} does not match {args.task!r}")
            raw["task"] = args.task
        for name in OVERRIDES:
            val = getattr(args, name)
            if val is not None:
                raw[name] = val
        return run(raw, out=args.out, threads=args.threads)
    except (ConfigError, ValueError, FileNotFoundError, json.JSONDecodeError, RuntimeError) as exc:
        print(f"conex: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
