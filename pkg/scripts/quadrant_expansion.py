"""Peel the quadrant expansion term by term from the conformal solution.

Fits v = u - u_T on the quadrant against r^4, r^6, r^8 (with the remaining
monoid exponents as nuisance terms) and reports the remainder slope after each
removal, the edge decay of the r^4 coefficient and its deviation from
2 sin^2(2 theta).

    python3 scripts/quadrant_expansion.py [--n-theta 256]
"""
from __future__ import annotations

import argparse
import math

import numpy as np

from conex.fit import edge_decay, expansion_residual, fit_coefficients
from conex.indexset import exponent_monoid
from conex.liouville import SectorSpec, oracle_field
from conex.pipeline import sector_mbars


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-theta", type=int, default=256)
    args = ap.parse_args()

    mu = 0.5
    spec = SectorSpec(mu, 1.0, 16, args.n_theta)
    r = np.exp(np.linspace(math.log(1e-3), math.log(0.5), 301))
    f = oracle_field(spec, r)
    monoid = [e for e in exponent_monoid(2, sector_mbars(mu, 8), 20).elements if e >= 4.0]
    print(f"{'kept':>16} {'remainder slope':>16}")
    for last in (4.0, 6.0, 8.0):
        keep = [e for e in monoid if e <= last]
        extra = [e for e in monoid if e > last]
        c = fit_coefficients(f.r, f.v, keep, (1e-2, 0.3), extra=extra)
        rep = expansion_residual(f.r, f.v, c, last, (1e-2, 1e-1))
        print(f"{str([f'{e:g}' for e in keep]):>16} {rep.slope:16.6f}")
    c4 = fit_coefficients(f.r, f.v, [4.0], (1e-2, 0.3), extra=[e for e in monoid if e > 4.0])[4.0]
    ref = 2 * np.sin(2 * f.theta) ** 2
    print(f"edge decay of c_4: {edge_decay(f.theta, c4, spec.alpha).exponent:.6f}")
    print(f"max |c_4 - 2 sin^2(2 theta)|: {np.max(np.abs(c4 - ref)):.3e}")
    c6 = fit_coefficients(f.r, f.v, [4.0, 6.0], (1e-2, 0.3),
                          extra=[e for e in monoid if e > 6.0])[6.0]
    print(f"max |c_6| (no r^6 term expected): {np.max(np.abs(c6)):.3e}")


if __name__ == "__main__":
    main()
