"""Eigenvalue growth lambda_i / i^2 and the counting function N(lambda)/sqrt(lambda).

    python3 scripts/growth_table.py [--mu 0.5] [--modes 20] [--grid 4096]
"""
from __future__ import annotations

import argparse
import math

from conex.spectral import count_eigenvalues, liouville_operator, solve_spectrum, verify_growth


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mu", type=float, default=0.5)
    ap.add_argument("--modes", type=int, default=20)
    ap.add_argument("--grid", type=int, default=4096)
    args = ap.parse_args()

    op = liouville_operator(args.mu, args.grid)
    s = solve_spectrum(op, args.modes, extrapolate=True)
    rep = verify_growth(s)
    weyl = rep["weyl_constant"]
    print(f"sector angle {args.mu:g}*pi, asymptotic N(lambda)/sqrt(lambda) = {weyl:.6f}")
    print(f"{'i':>3} {'lambda_i':>14} {'lambda_i/i^2':>13} {'N':>3} {'N/sqrt':>9} "
          f"{'N/sqrt before jump':>19}")
    for i, lam in enumerate(s.best_lambdas, start=1):
        n_at = count_eigenvalues(op, float(s.lambdas[i - 1]))
        n_below = count_eigenvalues(op, float(s.lambdas[i - 1]) * (1 - 1e-6))
        print(f"{i:3d} {lam:14.8f} {rep['ratios'][i - 1]:13.6f} {n_at:3d} "
              f"{n_at / math.sqrt(lam):9.5f} {n_below / math.sqrt(lam):19.5f}")
    print(f"min lambda_i/i^2 = {rep['min_ratio']:.6f} at i = {rep['argmin']}")


if __name__ == "__main__":
    main()
