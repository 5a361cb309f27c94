"""Grid-refinement sweeps: quadrant eigenvalues and the blow-up sector solver.

    python3 scripts/refinement_sweep.py [--max-grid 65536] [--sector-max 128]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from conex.liouville import SectorSpec, sector_error, solve_sector
from conex.spectral import liouville_operator, solve_spectrum


def eigen_sweep(max_grid: int, modes: int = 5) -> None:
    exact = 4.0 * np.arange(2, modes + 2) ** 2
    print(f"{'N':>7} {'max rel err':>12} {'extrapolated':>13} {'seconds':>8}")
    n = 256
    while n <= max_grid:
        t0 = time.perf_counter()
        s = solve_spectrum(liouville_operator(0.5, n), modes, extrapolate=True)
        dt = time.perf_counter() - t0
        raw = np.max(np.abs(s.lambdas / exact - 1))
        ext = np.max(np.abs(s.lambdas_extrapolated / exact - 1))
        print(f"{n:7d} {raw:12.3e} {ext:13.3e} {dt:8.3f}")
        n *= 2


def sector_sweep(mu: float, max_t: int) -> None:
    print(f"\nsector mu={mu:g}: sup error against the conformal solution")
    print(f"{'N_theta':>7} {'N_r':>5} {'error':>11} {'ratio':>6}")
    prev = None
    n = 16
    while n <= max_t:
        err = sector_error(solve_sector(SectorSpec(mu, 1.0, 4 * n, n)))
        ratio = "" if prev is None else f"{prev / err:6.2f}"
        print(f"{n:7d} {4 * n:5d} {err:11.3e} {ratio}")
        prev = err
        n *= 2


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-grid", type=int, default=65536)
    ap.add_argument("--sector-max", type=int, default=128)
    ap.add_argument("--mu", type=float, default=0.5)
    args = ap.parse_args()
    eigen_sweep(args.max_grid)
    sector_sweep(args.mu, args.sector_max)


if __name__ == "__main__":
    main()
