"""End-to-end checks of the sector expansion: project, fit, remainder."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .fit import edge_decay, expansion_residual, fit_coefficients, fit_exponent
from .indexset import exponent_monoid
from .liouville import SectorField, project_modes
from .spectral import liouville_operator, solve_spectrum


def sector_mbars(mu: float, count: int) -> list[float]:
    """Positive indicial roots ``sqrt(lam_i) = (i+1)/mu`` of the sector (k = 2)."""
    return [(i + 1) / mu for i in range(1, count + 1)]


def expansion_exponents(mu: float, cutoff: float) -> list[float]:
    """Elements of the two-dimensional index monoid ``I`` in ``(0, cutoff]``."""
    count = int(math.ceil(cutoff * mu)) + 1
    I = exponent_monoid(2, sector_mbars(mu, count), cutoff)
    return [e for e in I.elements if e > 0]


def verify_field(field: SectorField, *, window: Sequence[float] = (1e-3, 1e-1),
                 fit_window: Sequence[float] = (1e-2, 3e-1),
                 residual_window: Sequence[float] = (1e-2, 1e-1), modes: int = 3,
                 exponent_rtol: float = 0.01, decay_rtol: float = 0.05,
                 eps_min: float = 0.1, n_extra: int = 5) -> dict:
    """Leading exponent, edge decay and remainder order of ``v`` on a sector field.

    All radii are in units of ``M``.
    """
    mu, M = field.spec.mu, field.spec.M
    lead = 2.0 / mu
    basis = solve_spectrum(liouville_operator(mu, field.spec.theta_grid()), modes)
    proj = project_modes(field, basis, modes)
    fit = fit_exponent(field.r, proj.mode(1), (window[0] * M, window[1] * M))

    above = [e for e in expansion_exponents(mu, 4 * lead) if e > lead + 1e-9][:n_extra]
    coeffs = fit_coefficients(field.r, field.v, [lead], (fit_window[0] * M, fit_window[1] * M),
                              extra=above)
    decay = edge_decay(field.theta, coeffs[lead], field.spec.alpha)
    resid = expansion_residual(field.r, field.v, coeffs, lead,
                               (residual_window[0] * M, residual_window[1] * M), eps_min=eps_min)

    checks = {
        "exponent": {"fitted": fit.exponent, "expected": lead,
                     "passed": abs(fit.exponent - lead) <= exponent_rtol * lead},
        "edge_decay": {"fitted": decay.exponent, "expected": 2.0,
                       "passed": abs(decay.exponent - 2.0) <= decay_rtol * 2.0},
        "residual": {"slope": resid.slope, "threshold": lead + eps_min, "passed": resid.passed},
    }
    return {
        "mu": mu,
        "M": M,
        "checks": checks,
        "passed": all(c["passed"] for c in checks.values()),
        "fit": fit.to_dict(),
        "decay": decay.to_dict(),
        "extra_exponents": above,
        "projection": proj,
        "lambdas": basis.lambdas,
    }
