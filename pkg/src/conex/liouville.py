"""Two-dimensional Liouville problem ``Delta u = e^{2u}`` in a sector of angle ``mu*pi``.

The infinite sector has the explicit solution ``u_T = -log(mu r sin(theta/mu))``.
The truncated sector ``{0 < r < M}`` has an exact solution too: the conformal map

    zeta = (z/M)^{1/mu}   (sector -> upper half-disk),
    f = -(zeta + 1/zeta)/2   (upper half-disk -> upper half-plane),

pulls back the half-plane density, giving ``u = log(|f'| / Im f)``.  In polar
form the difference ``v = u - u_T`` is

    v = 1/2 log(1 + 4 rho^2 sin^2(psi) / (1 - rho^2)^2),   rho = (r/M)^{1/mu}, psi = theta/mu,

which is free of cancellation and is what the field oracle evaluates.

The solver works with ``v`` in ``s = log r``:

    v_ss + v_tt = (q/2) (e^{2v} - 1),   q = 2 / (mu^2 sin^2(theta/mu)),

with ``v = 0`` on the straight edges, ``v = 0`` at the inner radius and ``v`` prescribed
on the outer arc.  The linearization ``v_ss + v_tt - q v`` is the polar form of
``r^2 v_rr + r v_r + v_tt - 2 v / (mu^2 sin^2(theta/mu))``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .grid import Grid1D
from .spectral import SpectralSet, liouville_potential


class SectorDiverged(RuntimeError):
    pass


def _check_mu(mu: float) -> None:
    if not 0.0 < mu < 2.0:
        raise ValueError(f"mu must lie in (0, 2), got {mu}")


def cone_solution(mu: float, r, theta):
    """``u_T = -log(mu r sin(theta/mu))``, the solution on the infinite sector."""
    _check_mu(mu)
    r_arr = np.asarray(r, dtype=float)
    t_arr = np.asarray(theta, dtype=float)
    if np.any(r_arr <= 0) or np.any(t_arr <= 0) or np.any(t_arr >= mu * math.pi):
        raise ValueError("cone solution needs r > 0 and 0 < theta < mu*pi")
    out = -np.log(mu * r_arr * np.sin(t_arr / mu))
    return float(out) if out.ndim == 0 else out


def conformal_oracle(mu: float, M: float, z):
    """Exact solution on the truncated sector ``{|z| < M, 0 < arg z < mu*pi}`` at complex ``z``."""
    _check_mu(mu)
    z_arr = np.asarray(z, dtype=complex)
    arg = np.mod(np.angle(z_arr), 2.0 * math.pi)
    if np.any(np.abs(z_arr) <= 0) or np.any(arg <= 0) or np.any(arg >= mu * math.pi):
        raise ValueError("point must lie strictly inside the sector")
    # explicit polar form: the principal branch of z^{1/mu} is wrong for arg z > pi
    zeta = (np.abs(z_arr) / M) ** (1.0 / mu) * np.exp(1j * arg / mu)
    f = -(zeta + 1.0 / zeta) / 2.0
    fprime = -(1.0 - zeta**-2) / 2.0 * zeta / (mu * z_arr)
    imf = f.imag
    if np.any(imf < 1e-14):
        raise ValueError("too close to boundary: Im f below 1e-14")
    out = np.log(np.abs(fprime) / imf)
    return float(out) if out.ndim == 0 else out


def oracle_v(mu: float, M: float, r, theta):
    """``u - u_T`` for the truncated-sector oracle, evaluated without cancellation."""
    _check_mu(mu)
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(r >= M):
        raise ValueError("oracle v is infinite on and outside the arc r = M")
    rho2 = (r / M) ** (2.0 / mu)
    s = np.sin(theta / mu)
    return 0.5 * np.log1p(4.0 * rho2 * s**2 / (1.0 - rho2) ** 2)


def oracle_polar(mu: float, M: float, r, theta):
    return cone_solution(mu, r, theta) + oracle_v(mu, M, r, theta)


@dataclass(frozen=True)
class SectorSpec:
    mu: float
    M: float = 1.0
    n_r: int = 64
    n_theta: int = 32
    r_min_ratio: float = 1e-3

    def __post_init__(self):
        _check_mu(self.mu)
        if not self.M > 0:
            raise ValueError("M must be positive")
        if self.n_r < 16 or self.n_theta < 16:
            raise ValueError("polar grid needs at least 16 intervals in each direction")
        if not 0 < self.r_min_ratio < 0.5:
            raise ValueError("r_min_ratio must lie in (0, 0.5)")

    @property
    def alpha(self) -> float:
        return self.mu * math.pi

    def theta_grid(self) -> Grid1D:
        return Grid1D(0.0, self.alpha, self.n_theta)

    def outer_radius(self, mode: str) -> float:
        # v is infinite on r = M when the whole boundary blows up, so the blow-up
        # solve stops at M/2 and takes its trace there from the oracle
        return self.M / 2.0 if mode == "blowup" else self.M

    def radii(self, mode: str) -> np.ndarray:
        r_out = self.outer_radius(mode)
        return np.exp(np.linspace(math.log(self.r_min_ratio * self.M), math.log(r_out), self.n_r + 1))


@dataclass
class SectorField:
    spec: SectorSpec
    r: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    boundary_mode: str
    arc_trace: np.ndarray
    residual: float = 0.0
    iterations: int = 0
    u_T: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.u_T is None:
            self.u_T = cone_solution(self.spec.mu, self.r[:, None], self.theta[None, :])

    @property
    def u(self) -> np.ndarray:
        return self.u_T + self.v

    def save(self, out_dir: Path, stem: str = "field") -> Path:
        from .io import write_csv

        R, T = np.meshgrid(self.r, self.theta, indexing="ij")
        rows = zip(R.ravel(), T.ravel(), self.u.ravel(), self.u_T.ravel(), self.v.ravel())
        return write_csv(Path(out_dir) / f"{stem}.csv", ["r", "theta", "u", "u_T", "v"], rows)


def oracle_field(spec: SectorSpec, r: Optional[np.ndarray] = None, mode: str = "blowup") -> SectorField:
    """Exact field sampled on the solver grid (or on radii ``r``)."""
    theta = spec.theta_grid().nodes
    if r is None:
        r = spec.radii(mode)
    r = np.asarray(r, dtype=float)
    v = oracle_v(spec.mu, spec.M, r[:, None], theta[None, :])
    return SectorField(spec=spec, r=r, theta=theta, v=v, boundary_mode="oracle", arc_trace=v[-1].copy())


def _laplacian(ns: int, nt: int, hs: float, ht: float) -> sp.csr_matrix:
    """5-point ``d_ss + d_tt`` on interior s-nodes x cell-centered theta (odd ghosts)."""
    Ds = sp.diags([np.ones(ns - 1), -2.0 * np.ones(ns), np.ones(ns - 1)], [-1, 0, 1]) / hs**2
    main = -2.0 * np.ones(nt)
    main[0] = main[-1] = -3.0  # ghost = -first
    Dt = sp.diags([np.ones(nt - 1), main, np.ones(nt - 1)], [-1, 0, 1]) / ht**2
    return (sp.kron(Ds, sp.identity(nt)) + sp.kron(sp.identity(ns), Dt)).tocsr()


def _resolve_trace(spec: SectorSpec, mode: str, theta: np.ndarray,
                   arc_trace: Union[None, np.ndarray, Callable]) -> np.ndarray:
    if mode == "blowup":
        return oracle_v(spec.mu, spec.M, spec.outer_radius(mode), theta)
    if mode != "trace":
        raise ValueError(f"unknown boundary mode {mode!r}")
    if arc_trace is None:
        return np.zeros_like(theta)
    tr = arc_trace(theta) if callable(arc_trace) else np.asarray(arc_trace, dtype=float)
    if tr.shape != theta.shape:
        raise ValueError("arc trace must be sampled on the theta grid")
    _warn_corner_decay(tr, theta, spec.alpha)
    return tr


def _warn_corner_decay(tr: np.ndarray, theta: np.ndarray, alpha: float) -> None:
    """Warn when the arc trace vanishes slower than ``d^2`` at either corner."""
    d = (alpha / math.pi) * np.sin(math.pi * theta / alpha)
    edge = max(4, theta.size // 10)
    for sl in (slice(0, edge), slice(theta.size - edge, None)):
        dd, tt = d[sl], np.abs(tr[sl])
        keep = tt > 0
        if keep.sum() < 3:
            continue
        slope = np.polyfit(np.log(dd[keep]), np.log(tt[keep]), 1)[0]
        if slope < 1.5:
            warnings.warn(f"arc trace decays slower than d^2 at a corner (fitted rate {slope:.2f})",
                          RuntimeWarning)
            return


def solve_sector(spec: SectorSpec, boundary_mode: str = "blowup",
                 arc_trace: Union[None, np.ndarray, Callable] = None, tol: float = 1e-9,
                 max_steps: int = 50) -> SectorField:
    """Damped Newton solve for ``v`` on the polar grid."""
    theta = spec.theta_grid().nodes
    r = spec.radii(boundary_mode)
    trace = _resolve_trace(spec, boundary_mode, theta, arc_trace)
    s = np.log(r)
    hs = s[1] - s[0]
    ht = spec.theta_grid().h
    ns, nt = spec.n_r - 1, spec.n_theta

    L = _laplacian(ns, nt, hs, ht)
    q = np.tile(liouville_potential(spec.mu, theta), ns)
    # Dirichlet data enter through the outermost interior ring
    bc = np.zeros(ns * nt)
    bc[-nt:] = trace / hs**2

    def residual(x):
        return L @ x + bc - 0.5 * q * np.expm1(2.0 * x)

    x = np.zeros(ns * nt)
    res = residual(x)
    rnorm = float(np.max(np.abs(res)))
    steps = 0
    while rnorm > tol:
        if steps >= max_steps:
            raise SectorDiverged(f"sector solve did not converge; last residual {rnorm:.3e}")
        J = L - sp.diags(q * np.exp(2.0 * x))
        delta = spsolve(J.tocsc(), -res)
        step = 1.0
        for _ in range(13):
            trial = x + step * delta
            tres = residual(trial)
            tnorm = float(np.max(np.abs(tres)))
            if tnorm < rnorm:
                break
            step *= 0.5
        else:
            if np.max(np.abs(delta)) < 1e-13:
                break  # roundoff floor
            raise SectorDiverged(f"sector solve diverged; last residual {rnorm:.3e}")
        x, res, rnorm = trial, tres, tnorm
        steps += 1

    v = np.zeros((spec.n_r + 1, nt))
    v[1:-1] = x.reshape(ns, nt)
    v[-1] = trace
    return SectorField(spec=spec, r=r, theta=theta, v=v, boundary_mode=boundary_mode,
                       arc_trace=trace, residual=rnorm, iterations=steps)


def sector_error(field: SectorField) -> float:
    """Max interior ``|u_num - u_oracle|`` (blow-up mode) on the solver grid."""
    exact = oracle_v(field.spec.mu, field.spec.M, field.r[:, None], field.theta[None, :])
    return float(np.max(np.abs(field.v - exact)))


@dataclass
class ModeProjection:
    r: np.ndarray
    A: np.ndarray  # shape (len(r), count)
    lambdas: np.ndarray

    def mode(self, i: int) -> np.ndarray:
        """``A_i(r)`` with ``i`` starting at 1."""
        return self.A[:, i - 1]

    def save(self, out_dir: Path, stem: str = "modes") -> Path:
        from .io import write_csv

        header = ["r"] + [f"A_{i + 1}" for i in range(self.A.shape[1])]
        return write_csv(Path(out_dir) / f"{stem}.csv", header,
                         (np.concatenate([[ri], row]) for ri, row in zip(self.r, self.A)))


def project_modes(field: SectorField, basis: SpectralSet, count: int) -> ModeProjection:
    """``A_i(r) = <v(r, .), phi_i>_w`` ring by ring."""
    if basis.theta.shape != field.theta.shape or not np.allclose(basis.theta, field.theta, rtol=0, atol=1e-12):
        raise ValueError("basis grid does not match the field's theta grid")
    if count > len(basis):
        raise ValueError(f"basis has only {len(basis)} modes")
    phis = basis.phis[:count]
    A = field.v @ (phis * basis.w).T * basis.grid.h
    return ModeProjection(r=field.r.copy(), A=A, lambdas=basis.lambdas[:count].copy())
