"""Radial Euler operator ``r^2 A'' + (k-1) r A' - lam A`` and its solutions.

Every eigenmode coefficient ``A_i(r)`` of ``v = u - u_T`` obeys this ODE with
a forcing ``F_i``.  In ``s = log r`` it is constant-coefficient,
``A_ss + (k-2) A_s - lam A = F``, with characteristic polynomial
``chi(m) = m^2 + (k-2) m - lam`` and roots ``m_minus < 0 < m_plus``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .series import EXP_TOL, LOG_CAP, LogDegreeOverflow, PolyLogSeries


class ForcingTooSingular(ValueError):
    pass


@dataclass(frozen=True)
class IndicialPair:
    m_plus: float
    m_minus: float
    k: int
    lam: float

    @property
    def gap(self) -> float:
        return self.m_plus - self.m_minus

    def chi(self, m: float) -> float:
        return m * m + (self.k - 2) * m - self.lam


def indicial_roots(k: int, lam: float) -> IndicialPair:
    if not lam > 0:
        raise ValueError(f"indicial roots need lambda > 0, got {lam}")
    if k < 2:
        raise ValueError("k must be >= 2")
    disc = math.sqrt((k - 2) ** 2 + 4.0 * lam)
    # take the root without cancellation directly and the other one from Vieta
    if k > 2:
        m_minus = (-(k - 2) - disc) / 2.0
        m_plus = -lam / m_minus
    else:
        m_plus = disc / 2.0
        m_minus = -lam / m_plus
    return IndicialPair(m_plus=m_plus, m_minus=m_minus, k=k, lam=lam)


def _solve_monomial(pair: IndicialPair, a: float, j: int, c: float, exp_tol: float):
    """Polynomial ``P`` in ``s`` with ``L[e^{as} P(s)] = c s^j``; returns coeffs low->high."""
    if abs(a - pair.m_minus) < exp_tol:
        raise ValueError("forcing exponent equals the negative indicial root (unbounded branch)")
    chi = pair.chi(a)
    dchi = 2.0 * a + (pair.k - 2)
    # e^{-as} L[e^{as} P] = P'' + dchi P' + chi P
    if abs(a - pair.m_plus) < exp_tol:
        deg = j + 1
        if deg > LOG_CAP:
            raise LogDegreeOverflow("log-degree overflow")
        P = np.zeros(deg + 1)
        # match s^m for m = j..0: dchi (m+1) P[m+1] + (m+2)(m+1) P[m+2] = c delta_{mj}
        for m in range(j, -1, -1):
            rhs = (c if m == j else 0.0) - (m + 2) * (m + 1) * (P[m + 2] if m + 2 <= deg else 0.0)
            P[m + 1] = rhs / (dchi * (m + 1))
        return P
    P = np.zeros(j + 1)
    for m in range(j, -1, -1):
        rhs = c if m == j else 0.0
        if m + 1 <= j:
            rhs -= dchi * (m + 1) * P[m + 1]
        if m + 2 <= j:
            rhs -= (m + 2) * (m + 1) * P[m + 2]
        P[m] = rhs / chi
    return P


def particular_poly_log(k: int, lam: float, forcing: PolyLogSeries) -> PolyLogSeries:
    """Poly-log particular solution of ``r^2 A'' + (k-1) r A' - lam A = forcing``.

    Off resonance each ``r^a log^j`` term produces ``r^a`` times a polynomial of
    degree ``j`` in ``log r``; at ``a = m_plus`` the degree rises to ``j + 1``
    and the ``r^{m_plus}`` (homogeneous) component is left out.
    """
    pair = indicial_roots(k, lam)
    tol = forcing.exp_tol
    acc: dict[tuple[float, int], float] = {}
    for (a, j), c in forcing.terms.items():
        P = _solve_monomial(pair, a, j, c, tol)
        for m, pm in enumerate(P):
            if pm != 0.0:
                acc[(a, m)] = acc.get((a, m), 0.0) + float(pm)
    return PolyLogSeries(acc, order=forcing.order, exp_tol=tol)


def is_resonant(k: int, lam: float, a: float, exp_tol: float = EXP_TOL) -> bool:
    return abs(a - indicial_roots(k, lam).m_plus) < exp_tol


# -- quadrature solution -------------------------------------------------------


Forcing = Union[np.ndarray, Callable[[np.ndarray], np.ndarray], PolyLogSeries, None]


def radial_grid(r0: float, decades: float = 6.0, per_decade: int = 400) -> np.ndarray:
    """Log-uniform grid on ``[r0 * 10^-decades, r0]``."""
    n = int(round(decades * per_decade))
    return r0 * np.logspace(-decades, 0.0, n + 1)


@dataclass
class RadialMode:
    lam: float
    k: int
    r0: float
    A_at_r0: float
    r: np.ndarray = None
    forcing: Forcing = None
    A: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.r is None:
            self.r = radial_grid(self.r0)
        self.r = np.asarray(self.r, dtype=float)
        if abs(self.r[-1] - self.r0) > 1e-12 * self.r0:
            raise ValueError("radial grid must end at r0")
        s = np.log(self.r)
        ds = np.diff(s)
        if np.any(ds <= 0) or np.max(np.abs(ds - ds.mean())) > 1e-9 * max(1.0, abs(ds.mean())):
            raise ValueError("radial grid must be log-uniform and increasing")

    def forcing_samples(self) -> np.ndarray:
        f = self.forcing
        if f is None:
            return np.zeros_like(self.r)
        if isinstance(f, PolyLogSeries):
            return np.asarray(f(self.r), dtype=float)
        if callable(f):
            return np.asarray(f(self.r), dtype=float)
        f = np.asarray(f, dtype=float)
        if f.shape != self.r.shape:
            raise ValueError("forcing samples must match the radial grid")
        return f


def _cumtrapz_corrected(g: np.ndarray, h: float) -> np.ndarray:
    """Cumulative trapezoid from the left end with the Euler-Maclaurin slope correction."""
    out = np.zeros_like(g)
    out[1:] = np.cumsum((g[1:] + g[:-1]) * (h / 2.0))
    dg = _gradient4(g, h)
    return out - h**2 / 12.0 * (dg - dg[0])


def _gradient4(g: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order first derivative; one-sided 5-point stencils at the ends."""
    if g.size < 5:
        return np.gradient(g, h)
    d = np.empty_like(g)
    d[2:-2] = (g[:-4] - 8 * g[1:-3] + 8 * g[3:-1] - g[4:]) / (12 * h)
    d[0] = (-25 * g[0] + 48 * g[1] - 36 * g[2] + 16 * g[3] - 3 * g[4]) / (12 * h)
    d[1] = (-3 * g[0] - 10 * g[1] + 18 * g[2] - 6 * g[3] + g[4]) / (12 * h)
    d[-1] = (25 * g[-1] - 48 * g[-2] + 36 * g[-3] - 16 * g[-4] + 3 * g[-5]) / (12 * h)
    d[-2] = (3 * g[-1] + 10 * g[-2] - 18 * g[-3] + 6 * g[-4] - g[-5]) / (12 * h)
    return d


def _local_power(r: np.ndarray, F: np.ndarray, nfit: int = 4) -> float | None:
    head = F[:nfit]
    if np.all(head == 0.0):
        return None
    if np.any(head == 0.0) or np.any(np.sign(head) != np.sign(head[0])):
        raise ForcingTooSingular("forcing too singular at 0: no local power law near r = 0")
    slope, _ = np.polyfit(np.log(r[:nfit]), np.log(np.abs(head)), 1)
    return float(slope)


def solve_radial_ode(mode: RadialMode) -> np.ndarray:
    """Bounded solution on ``(0, r0]`` with ``A(r0)`` prescribed.

    Evaluates

        A = (A0 r0^{-m+} + r0^{m- - m+}/D I_-(r0)) r^{m+}
            - r^{m-}/D I_-(r) - r^{m+}/D I_+(r)

    with ``I_-(r) = int_0^r s^{-1-m-} F ds``, ``I_+(r) = int_r^{r0} s^{-1-m+} F ds``,
    ``D = m+ - m-``.  The piece of ``I_-`` on ``(0, r_min)`` is integrated
    exactly against the power law fitted to the first samples.
    """
    pair = indicial_roots(mode.k, mode.lam)
    mp, mm, D = pair.m_plus, pair.m_minus, pair.gap
    r = mode.r
    s = np.log(r)
    h = s[1] - s[0]
    F = mode.forcing_samples()

    if np.all(F == 0.0):
        A = mode.A_at_r0 * (r / mode.r0) ** mp
        A[-1] = mode.A_at_r0
        mode.A = A
        return A

    g_minus = np.exp(-mm * s) * F
    g_plus = np.exp(-mp * s) * F
    p = _local_power(r, F)
    if p is None:
        head = 0.0
    else:
        if not p - mm > 1e-8:
            raise ForcingTooSingular(
                f"forcing too singular at 0: local power {p:.4g} <= {mm:.4g}")
        head = g_minus[0] / (p - mm)
    I_minus = head + _cumtrapz_corrected(g_minus, h)
    # accumulate from r0 inward: g_plus is huge near 0 and total-minus-partial would cancel
    I_plus = _cumtrapz_corrected(g_plus[::-1], h)[::-1]

    C2 = mode.A_at_r0 * mode.r0 ** (-mp) + mode.r0 ** (mm - mp) / D * I_minus[-1]
    A = C2 * r**mp - r**mm / D * I_minus - r**mp / D * I_plus
    A[-1] = mode.A_at_r0
    mode.A = A
    return A


def euler_operator(r: np.ndarray, A: np.ndarray, k: int, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Apply ``r^2 A'' + (k-1) r A' - lam A`` on a log-uniform grid (4th-order stencils).

    Returns ``(r_interior, values)`` for the nodes with two neighbours on each side.
    """
    s = np.log(r)
    h = s[1] - s[0]
    Ass = (-A[4:] + 16 * A[3:-1] - 30 * A[2:-2] + 16 * A[1:-3] - A[:-4]) / (12 * h**2)
    As = (-A[4:] + 8 * A[3:-1] - 8 * A[1:-3] + A[:-4]) / (12 * h)
    return r[2:-2], Ass + (k - 2) * As - lam * A[2:-2]
