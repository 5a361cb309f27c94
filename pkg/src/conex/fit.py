"""Expansion data from sampled fields: leading exponents, edge decay, remainder orders."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

NOISE_FLOOR = 1e-10
LOG_RATIO = 10.0


class OscillatoryWindow(ValueError):
    pass


@dataclass
class ExponentFit:
    exponent: float
    log_flag: bool
    r2: float
    window: tuple[float, float]
    n_samples: int
    power_law_exponent: float = float("nan")
    residual_power: float = float("nan")
    residual_log: float = float("nan")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def _window(t: np.ndarray, y: np.ndarray, window: Optional[tuple[float, float]]):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape:
        raise ValueError("t and y must have the same shape")
    if window is None:
        window = (float(np.min(t)), float(np.max(t)))
    lo, hi = window
    mask = (t >= lo) & (t <= hi) & (t > 0)
    tw, yw = t[mask], y[mask]
    if tw.size < 8:
        raise ValueError(f"need at least 8 samples in the window, got {tw.size}")
    nz = yw != 0.0
    if np.any(np.sign(yw[nz]) != np.sign(yw[nz][0])):
        raise OscillatoryWindow("oscillatory, refine window")
    tw, yw = tw[nz], yw[nz]
    if tw.size < 8:
        raise ValueError("fewer than 8 nonzero samples in the window")
    return tw, yw, (float(lo), float(hi))


def _log_model(a: float, x: np.ndarray, ay: np.ndarray):
    """Best ``t^a (c0 + c1 log t)`` for fixed ``a``; returns (rms relative residual, coeffs)."""
    base = np.exp(a * x)
    B = np.column_stack([base, base * x]) / ay[:, None]
    c, *_ = np.linalg.lstsq(B, np.ones_like(ay), rcond=None)
    rel = B @ c - 1.0
    return float(np.sqrt(np.mean(rel**2))), c


def fit_exponent(t, y, window: Optional[tuple[float, float]] = None) -> ExponentFit:
    """Leading exponent of ``y ~ C t^a`` (possibly times ``log t``) on a window.

    The power law is a straight-line fit of ``log|y|`` against ``log t``.  The
    log alternative ``t^a (c0 + c1 log t)`` has its exponent fitted by variable
    projection; the log flag is raised when it lowers the relative residual by
    at least 10x and the power law is not already exact.  When the flag is
    set, the exponent reported is the one from the log model.
    """
    tw, yw, win = _window(t, y, window)
    x = np.log(tw)
    ay = np.abs(yw)
    ly = np.log(ay)
    slope, icpt = np.polyfit(x, ly, 1)
    res1 = ly - (slope * x + icpt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res1**2)) / ss_tot if ss_tot > 0 else 1.0
    rms1 = float(np.sqrt(np.mean(np.expm1(res1) ** 2)))

    span = 2.0
    grid = np.linspace(slope - span, slope + span, 81)
    vals = [_log_model(a, x, ay)[0] for a in grid]
    a0 = grid[int(np.argmin(vals))]
    step = grid[1] - grid[0]
    opt = minimize_scalar(lambda a: _log_model(a, x, ay)[0], bounds=(a0 - step, a0 + step),
                          method="bounded", options={"xatol": 1e-12})
    a_log, rms2 = float(opt.x), float(opt.fun)

    log_flag = rms1 > NOISE_FLOOR and rms2 * LOG_RATIO <= rms1
    exponent = a_log if log_flag else float(slope)
    return ExponentFit(exponent=exponent, log_flag=bool(log_flag), r2=float(r2), window=win,
                       n_samples=int(tw.size), power_law_exponent=float(slope),
                       residual_power=rms1, residual_log=rms2)


def edge_decay(theta, row, alpha: float, fraction: float = 0.1, side: str = "left") -> ExponentFit:
    """Decay exponent of ``row`` against ``d_S`` within ``d_S < fraction * alpha`` of an edge."""
    theta = np.asarray(theta, dtype=float)
    row = np.asarray(row, dtype=float)
    d = (alpha / math.pi) * np.sin(math.pi * theta / alpha)
    half = theta < alpha / 2 if side == "left" else theta > alpha / 2
    mask = half & (d < fraction * alpha)
    return fit_exponent(d[mask], row[mask])


def fit_coefficients(r, v, exponents: Sequence[float], window: tuple[float, float],
                     extra: Sequence[float] = ()) -> dict[float, np.ndarray]:
    """Per-column least squares ``v(r, .) ~ sum_a c_a(.) r^a`` on ``window``.

    ``extra`` exponents are fitted alongside but not returned: they soak up
    the next terms of the expansion so the requested coefficients are not biased
    by truncation.  Rows are weighted by ``r^-min(exponents)``.
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    mask = (r >= window[0]) & (r <= window[1])
    rw = r[mask] / window[1]
    allexp = list(exponents) + [e for e in extra if e not in exponents]
    if mask.sum() < 2 * len(allexp):
        raise ValueError("window has too few radii for the requested basis")
    e0 = min(allexp)
    B = np.column_stack([rw ** (e - e0) for e in allexp])
    rhs = v[mask] / rw[:, None] ** e0
    c, *_ = np.linalg.lstsq(B, rhs, rcond=None)
    return {float(e): c[i] / window[1] ** e for i, e in enumerate(allexp) if i < len(exponents)}


@dataclass
class ResidualReport:
    slope: float
    order: float
    eps_min: float
    passed: bool
    r: np.ndarray
    max_residual: np.ndarray
    window: tuple[float, float]

    def to_dict(self) -> dict:
        return {"slope": self.slope, "order": self.order, "eps_min": self.eps_min,
                "passed": self.passed, "window": list(self.window),
                "r": self.r, "max_residual": self.max_residual}


def expansion_residual(r, v, fitted: Mapping[float, np.ndarray], order: float,
                       window: tuple[float, float], eps_min: float = 0.1) -> ResidualReport:
    """Slope of ``max_theta |v - sum_a c_a(theta) r^a|`` against ``r`` on ``window``.

    Passes when the slope is at least ``order + eps_min``.
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    R = v.copy()
    for a, c in fitted.items():
        R -= np.outer(r**a, np.asarray(c, dtype=float))
    mask = (r >= window[0]) & (r <= window[1])
    rr = r[mask]
    mx = np.max(np.abs(R[mask]), axis=1)
    if rr.size < 4:
        raise ValueError("too few radii in the window")
    if np.any(mx == 0):
        slope = float("inf")
    else:
        slope = float(np.polyfit(np.log(rr), np.log(mx), 1)[0])
    return ResidualReport(slope=slope, order=float(order), eps_min=eps_min,
                          passed=bool(slope >= order + eps_min), r=rr, max_residual=mx,
                          window=(float(window[0]), float(window[1])))
