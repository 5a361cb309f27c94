"""Blow-up profile on a circular arc and the explicit barrier constants.

For a cone ``R^{n-2} x T_2`` over an arc ``S = (0, alpha)`` the cone solution is
``u_T = r^{-(n-2)/2} u_S(theta)`` where

    u_S'' + (n-2)^2/4 u_S = n(n-2)/4 u_S^{(n+2)/(n-2)},   u_S = +inf at both ends.

We never discretize ``u_S`` itself.  Writing ``u_S = d^{-b} w`` with
``b = (n-2)/2`` and ``d`` the defining function below, and multiplying through
by ``d^{b+2}``, gives the regular-singular problem

    d^2 w'' - 2b d d' w' + (b(b+1) d'^2 - b d d'' + b^2 d^2) w = b(b+1) w^p

with ``w = 1`` at both endpoints.  ``w`` is bounded and smooth up to the
boundary, which is what makes a plain second-order scheme converge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_banded

from .grid import Grid1D
from .series import PolyLogSeries


class ProfileDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class ConeSpec:
    n: int
    k: int = 2
    alpha: float = math.pi
    M: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2 (n = 2 selects Liouville mode)")
        if self.n >= 3 and not 2 <= self.k <= self.n:
            raise ValueError(f"need 2 <= k <= n, got k={self.k}, n={self.n}")
        if not 0.0 < self.alpha < 2.0 * math.pi:
            raise ValueError(f"arc angle must lie in (0, 2pi), got {self.alpha}")
        if not self.M > 0:
            raise ValueError("M must be positive")

    @property
    def beta(self) -> float:
        return (self.n - 2) / 2.0

    @property
    def power(self) -> float:
        return (self.n + 2) / (self.n - 2)


def defining_function(theta, alpha: float):
    """Smooth distance-like function to the arc endpoints, slope 1 at both ends."""
    s = math.pi / alpha
    theta = np.asarray(theta, dtype=float)
    return np.sin(s * theta) / s, np.cos(s * theta), -s * np.sin(s * theta)


@dataclass
class ProfileSolution:
    cone: ConeSpec
    grid: Grid1D
    u_S: np.ndarray
    w: np.ndarray
    c_S: PolyLogSeries
    sigma: float
    residual: float
    iterations: int
    d_S: np.ndarray = field(repr=False, default=None)

    @property
    def theta(self) -> np.ndarray:
        return self.grid.nodes

    def potential(self) -> np.ndarray:
        """``n(n+2)/4 * u_S^{4/(n-2)}``, the singular potential of the linearized operator."""
        n = self.cone.n
        return n * (n + 2) / 4.0 * self.u_S ** (4.0 / (n - 2))

    def natural_defining_function(self) -> np.ndarray:
        """``u_S^{-2/(n-2)}``, the defining function built from the profile itself."""
        return self.u_S ** (-2.0 / (self.cone.n - 2))

    def header(self) -> dict:
        return {
            "n": self.cone.n,
            "k": self.cone.k,
            "alpha": self.cone.alpha,
            "M": self.cone.M,
            "grid": self.grid.count,
            "sigma": self.sigma,
            "residual": self.residual,
            "iterations": self.iterations,
            "c_S": self.c_S.to_dict(),
        }

    def save(self, out_dir: Path, stem: str = "profile") -> list[Path]:
        from .io import write_csv, write_json

        out_dir = Path(out_dir)
        csv_path = write_csv(out_dir / f"{stem}.csv", ["theta", "u_S", "w"],
                             zip(self.theta, self.u_S, self.w))
        json_path = write_json(out_dir / f"{stem}.json", self.header())
        return [csv_path, json_path]


def _residual(w, d, d1, d2, b, p, h):
    n = w.size
    ghost = np.empty(n + 2)
    ghost[1:-1] = w
    ghost[0] = 2.0 - w[0]
    ghost[-1] = 2.0 - w[-1]
    wpp = (ghost[2:] - 2.0 * w + ghost[:-2]) / h**2
    wp = (ghost[2:] - ghost[:-2]) / (2.0 * h)
    c0 = b * (b + 1) * d1**2 - b * d * d2 + b**2 * d**2
    return d**2 * wpp - 2.0 * b * d * d1 * wp + c0 * w - b * (b + 1) * np.abs(w) ** p


def _jacobian_banded(w, d, d1, d2, b, p, h):
    n = w.size
    c0 = b * (b + 1) * d1**2 - b * d * d2 + b**2 * d**2
    lower = d**2 / h**2 + b * d * d1 / h
    upper = d**2 / h**2 - b * d * d1 / h
    diag = -2.0 * d**2 / h**2 + c0 - b * (b + 1) * p * np.abs(w) ** (p - 1)
    # ghost node w_ghost = 2 - w_first folds back into the diagonal
    diag[0] -= lower[0]
    diag[-1] -= upper[-1]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return ab


def solve_profile(cone: ConeSpec, grid: Grid1D | None = None, tol: float = 1e-10,
                  max_steps: int = 100, fit_window: float = 0.1) -> ProfileSolution:
    """Damped Newton solve for the arc profile ``u_S`` (k = 2 slice)."""
    if cone.k != 2:
        raise ValueError("the nonlinear profile solve is implemented for k = 2 only")
    if cone.n < 3:
        raise ValueError("profile solve needs n >= 3")
    if grid is None:
        grid = Grid1D(0.0, cone.alpha, 1024)
    if abs(grid.a) > 1e-14 or abs(grid.b - cone.alpha) > 1e-12:
        raise ValueError("grid must span (0, alpha)")

    b, p, h = cone.beta, cone.power, grid.h
    theta = grid.nodes
    d, d1, d2 = defining_function(theta, cone.alpha)

    w = np.ones_like(theta)
    res = _residual(w, d, d1, d2, b, p, h)
    rnorm = np.max(np.abs(res))
    steps = 0
    while rnorm > tol:
        if steps >= max_steps:
            raise ProfileDiverged(f"profile diverged; last residual {rnorm:.3e}")
        delta = solve_banded((1, 1), _jacobian_banded(w, d, d1, d2, b, p, h), -res)
        if np.max(np.abs(delta)) < 1e-13:
            # converged to roundoff: the residual floor scales like eps * d^2/h^2
            break
        step = 1.0
        for _ in range(30):
            trial = w + step * delta
            tres = _residual(trial, d, d1, d2, b, p, h)
            tnorm = np.max(np.abs(tres))
            if tnorm < rnorm and np.all(trial > 0):
                break
            step *= 0.5
        else:
            raise ProfileDiverged(f"profile diverged; last residual {rnorm:.3e}")
        w, res, rnorm = trial, tres, tnorm
        steps += 1

    u_S = w * d ** (-b)
    sigma = float(np.min(u_S ** (4.0 / (cone.n - 2))))
    c_S = fit_boundary_expansion(d, w, cone.n, window=fit_window * cone.alpha)
    return ProfileSolution(cone=cone, grid=grid, u_S=u_S, w=w, c_S=c_S, sigma=sigma,
                           residual=float(rnorm), iterations=steps, d_S=d)


def profile_residual(sol: ProfileSolution) -> float:
    """Max-norm residual of the discrete normalized profile equation at ``sol``."""
    d, d1, d2 = defining_function(sol.theta, sol.cone.alpha)
    res = _residual(sol.w, d, d1, d2, sol.cone.beta, sol.cone.power, sol.grid.h)
    return float(np.max(np.abs(res)))


def fit_boundary_expansion(d: np.ndarray, w: np.ndarray, n: int, window: float) -> PolyLogSeries:
    """Least-squares fit of ``w = 1 + sum c_i d^i + c_{n,j} d^n log(d)^j`` near the left end.

    The constant is pinned to 1 (it is the boundary condition); log powers at
    ``d^n`` go up to ``floor(n/n) = 1``.
    """
    mask = (d < window) & (np.arange(d.size) < d.size // 2)
    dd, ww = d[mask], w[mask]
    basis = [(float(i), 0) for i in range(1, n)] + [(float(n), 0), (float(n), 1)]
    if dd.size < 2 * len(basis):
        return PolyLogSeries({(0.0, 0): 1.0}, order=float(n))
    A = np.column_stack([dd**e * np.log(dd) ** j for e, j in basis])
    scale = np.max(np.abs(A), axis=0)
    coef, *_ = np.linalg.lstsq(A / scale, ww - 1.0, rcond=None)
    coef = coef / scale
    terms = {(0.0, 0): 1.0}
    terms.update({key: float(c) for key, c in zip(basis, coef)})
    return PolyLogSeries(terms, order=float(n))


def halfplane_oracle(n: int, theta):
    """``(sin theta)^{-(n-2)/2}``: the profile of the half-space solution ``x_n^{-(n-2)/2}``."""
    theta_arr = np.asarray(theta, dtype=float)
    if np.any((theta_arr <= 0) | (theta_arr >= math.pi)):
        raise ValueError("theta must lie in (0, pi)")
    out = np.sin(theta_arr) ** (-(n - 2) / 2.0)
    return float(out) if np.ndim(theta) == 0 else out


def ball_barrier(n: int, M: float, x_norm):
    """Loewner-Nirenberg solution of the ball of radius ``M``."""
    x = np.asarray(x_norm, dtype=float)
    if np.any(x < 0) or np.any(x >= M):
        raise ValueError("ball barrier needs 0 <= |x| < M")
    out = (2.0 * M / (M**2 - x**2)) ** ((n - 2) / 2.0)
    return float(out) if np.ndim(x_norm) == 0 else out


def comparison_bound(n: int, M: float) -> float:
    """Bound on ``|u_1 - u_2|`` in ``T_{M/2}`` for two blow-up solutions in ``T_M``."""
    return (4.0 / M) ** ((n - 2) / 2.0)


def admissible_beta(n: int, sigma: float, beta: float) -> bool:
    """Whether ``beta(n + beta - 2) < n(n+2) sigma / 4`` (strict)."""
    if sigma <= 0 or beta <= 0:
        raise ValueError("sigma and beta must be positive")
    return beta * (n + beta - 2) - n * (n + 2) * sigma / 4.0 < 0


def max_beta(n: int, sigma: float) -> float:
    """Positive root of ``beta(n + beta - 2) = n(n+2) sigma / 4``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return (-(n - 2) + math.sqrt((n - 2) ** 2 + n * (n + 2) * sigma)) / 2.0
