"""Singular Sturm-Liouville problems on an interval.

Operators have the form ``-(p phi')' + q phi = lam * w * phi`` on ``(a, b)``
where ``q`` blows up like ``kappa / d^2`` at both ends.  The eigenfunctions of
interest lie in ``H^1_0``, so a cell-centered grid with odd reflection across
each endpoint (``phi_ghost = -phi_first``) is the natural discretization; ``q``
is never evaluated at the singular endpoint.

Eigenvalues are stored positive: ``L_S phi = -lam phi`` with
``L_S = Delta_S - potential``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .grid import Grid1D


class InsufficientGrid(ValueError):
    pass


@dataclass
class SingularOperator:
    grid: Grid1D
    q: np.ndarray
    p_faces: np.ndarray = None
    w: np.ndarray = None
    kappa: float = float("nan")
    builder: Optional[Callable[[Grid1D], "SingularOperator"]] = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        n = self.grid.count
        self.q = np.asarray(self.q, dtype=float)
        if self.q.shape != (n,):
            raise ValueError("q must be sampled on the grid nodes")
        if self.p_faces is None:
            self.p_faces = np.ones(n + 1)
        self.p_faces = np.asarray(self.p_faces, dtype=float)
        if self.w is None:
            self.w = np.ones(n)
        self.w = np.asarray(self.w, dtype=float)
        if self.p_faces.shape != (n + 1,) or self.w.shape != (n,):
            raise ValueError("p must live on the n+1 faces and w on the n nodes")
        if np.any(self.p_faces <= 0) or np.any(self.w <= 0):
            raise ValueError("p and w must be positive")

    def rebuild(self, grid: Grid1D) -> "SingularOperator":
        if self.builder is None:
            raise ValueError("operator has no builder; cannot resample on another grid")
        return self.builder(grid)


@dataclass
class TridiagonalSystem:
    """Symmetric tridiagonal ``B = W^{-1/2} A W^{-1/2}`` plus the weights to undo it."""

    diag: np.ndarray
    off: np.ndarray
    w: np.ndarray
    h: float

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)


def assemble_operator(op: SingularOperator) -> TridiagonalSystem:
    h = op.grid.h
    pf = op.p_faces
    diag = (pf[:-1] + pf[1:]) / h**2 + op.q
    # Dirichlet by odd reflection: boundary flux is p_face * 2 phi / h
    diag[0] += pf[0] / h**2
    diag[-1] += pf[-1] / h**2
    off = -pf[1:-1] / h**2
    sw = np.sqrt(op.w)
    diag = diag / op.w
    off = off / (sw[:-1] * sw[1:])
    return TridiagonalSystem(diag=diag, off=off, w=op.w, h=h)


def sturm_count(system: TridiagonalSystem, x: float) -> int:
    """Number of eigenvalues of the tridiagonal system strictly below ``x``."""
    d = system.diag
    e2 = system.off**2
    count = 0
    q = d[0] - x
    tiny = 1e-300
    if q < 0:
        count += 1
    for i in range(1, d.size):
        if q == 0.0:
            q = tiny
        q = (d[i] - x) - e2[i - 1] / q
        if q < 0:
            count += 1
    return count


@dataclass
class SpectralSet:
    lambdas: np.ndarray
    phis: np.ndarray
    grid: Grid1D
    w: np.ndarray
    dim_l: int = 1
    lambdas_extrapolated: Optional[np.ndarray] = None
    label: str = ""

    def __len__(self) -> int:
        return self.lambdas.size

    @property
    def theta(self) -> np.ndarray:
        return self.grid.nodes

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum(self.w * f * g) * self.grid.h)

    def gram(self) -> np.ndarray:
        return (self.phis * self.w) @ self.phis.T * self.grid.h

    @property
    def best_lambdas(self) -> np.ndarray:
        if self.lambdas_extrapolated is not None:
            return self.lambdas_extrapolated
        return self.lambdas

    def save(self, out_dir: Path, stem: str = "spectrum") -> list[Path]:
        from .io import write_csv, write_json

        out_dir = Path(out_dir)
        ext = self.lambdas_extrapolated
        if ext is None:
            ext = np.full_like(self.lambdas, np.nan)
        rows = [(i + 1, lam, lx) for i, (lam, lx) in enumerate(zip(self.lambdas, ext))]
        csv_path = write_csv(out_dir / f"{stem}.csv", ["index", "lambda", "lambda_extrapolated"], rows)
        sidecar = {
            "label": self.label,
            "grid": {"a": self.grid.a, "b": self.grid.b, "count": self.grid.count,
                     "scheme": self.grid.scheme},
            "dim_l": self.dim_l,
            "theta": self.theta,
            "phis": self.phis,
        }
        json_path = write_json(out_dir / f"{stem}_eigenfunctions.json", sidecar)
        return [csv_path, json_path]


def _fix_sign(phi: np.ndarray) -> np.ndarray:
    big = np.flatnonzero(np.abs(phi) > 1e-6 * np.max(np.abs(phi)))
    return -phi if phi[big[0]] < 0 else phi


def solve_spectrum(op: SingularOperator, count: int, extrapolate: bool = False) -> SpectralSet:
    """Lowest ``count`` eigenpairs by Sturm bisection and inverse iteration.

    With ``extrapolate=True`` the operator is rebuilt on the half-resolution
    grid and the eigenvalues are Richardson-extrapolated assuming second order.
    """
    n = op.grid.count
    if count < 1:
        raise ValueError("count must be positive")
    if count > n // 8:
        raise InsufficientGrid(f"insufficient grid: {count} modes need at least {8 * count} cells")
    system = assemble_operator(op)
    lam, vec = eigh_tridiagonal(system.diag, system.off, select="i",
                                select_range=(0, count - 1), lapack_driver="stebz")
    if not np.all(np.isfinite(vec)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(vec), axis=0))[0])
        raise RuntimeError(f"inverse iteration did not converge for mode {bad + 1}")
    phis = (vec / np.sqrt(op.w)[:, None]).T
    norms = np.sqrt(np.sum(op.w * phis**2, axis=1) * op.grid.h)
    phis = np.array([_fix_sign(ph / nm) for ph, nm in zip(phis, norms)])

    ext = None
    if extrapolate:
        coarse = op.rebuild(Grid1D(op.grid.a, op.grid.b, n // 2, op.grid.scheme))
        csys = assemble_operator(coarse)
        lam_c = eigh_tridiagonal(csys.diag, csys.off, eigvals_only=True, select="i",
                                 select_range=(0, count - 1), lapack_driver="stebz")
        ext = (4.0 * lam - lam_c) / 3.0
    return SpectralSet(lambdas=lam, phis=phis, grid=op.grid, w=op.w.copy(),
                       lambdas_extrapolated=ext, label=op.label)


def count_eigenvalues(op: SingularOperator, lam: float) -> int:
    """Discrete counting function ``N(lam)``: eigenvalues ``<= lam`` with multiplicity.

    Eigenvalues within the backward-error radius ``64 eps ||T||`` of ``lam``
    count as equal to it, so ``N`` evaluated at a computed eigenvalue includes it.
    """
    system = assemble_operator(op)
    norm = float(np.max(np.abs(system.diag))) + 2.0 * float(np.max(np.abs(system.off), initial=0.0))
    return sturm_count(system, lam + 64.0 * np.finfo(float).eps * norm)


# -- concrete operators ----------------------------------------------------


def liouville_potential(mu: float, theta):
    """Linearized Liouville potential ``2 / (mu^2 sin^2(theta/mu))`` on the sector ``(0, mu pi)``."""
    return 2.0 / (mu**2 * np.sin(np.asarray(theta, dtype=float) / mu) ** 2)


def liouville_operator(mu: float, grid: Grid1D | int) -> SingularOperator:
    if isinstance(grid, int):
        grid = Grid1D(0.0, mu * math.pi, grid)
    return SingularOperator(grid=grid, q=liouville_potential(mu, grid.nodes), kappa=2.0,
                            builder=lambda g: liouville_operator(mu, g),
                            label=f"liouville mu={mu:g}")


def kappa_operator(kappa: float, grid: Grid1D, d: Callable[[np.ndarray], np.ndarray]) -> SingularOperator:
    """``-phi'' + kappa/d^2 phi`` for a defining function ``d`` (a callable on nodes)."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return SingularOperator(grid=grid, q=kappa / d(grid.nodes) ** 2, kappa=kappa,
                            builder=lambda g: kappa_operator(kappa, g, d),
                            label=f"kappa={kappa:g}")


def profile_operator(profile) -> SingularOperator:
    """``-Delta_S + n(n+2)/4 u_S^{4/(n-2)}`` built from a solved arc profile."""
    from .profile import solve_profile

    n = profile.cone.n

    def build(g: Grid1D) -> SingularOperator:
        sol = profile if g == profile.grid else solve_profile(profile.cone, g)
        return SingularOperator(grid=g, q=sol.potential(), kappa=n * (n + 2) / 4.0,
                                builder=build, label=f"profile n={n} alpha={profile.cone.alpha:g}")

    return build(profile.grid)


def dirichlet_laplacian(grid: Grid1D) -> SingularOperator:
    return SingularOperator(grid=grid, q=np.zeros(grid.count),
                            builder=dirichlet_laplacian, label="dirichlet")


# -- diagnostics -------------------------------------------------------------


def verify_growth(s: SpectralSet, lambdas: Optional[np.ndarray] = None) -> dict:
    """Check ``lam_i > C_1 i^{2/l}`` and tabulate the counting function."""
    lam = s.best_lambdas if lambdas is None else np.asarray(lambdas)
    if lam.size == 0:
        raise ValueError("empty spectral set")
    idx = np.arange(1, lam.size + 1)
    ratios = lam / idx ** (2.0 / s.dim_l)
    counts = np.searchsorted(np.sort(lam), lam, side="right")
    weyl = s.grid.length / math.pi if s.dim_l == 1 else float("nan")
    scaled = counts / np.sqrt(lam) if s.dim_l == 1 else counts / lam ** (s.dim_l / 2.0)
    report = {
        "min_ratio": float(np.min(ratios)),
        "argmin": int(np.argmin(ratios)) + 1,
        "ratios": ratios,
        "counting": [{"lambda": float(l), "N": int(c)} for l, c in zip(lam, counts)],
        "weyl_constant": weyl,
        "counting_scaled": scaled,
        "counting_scaled_max": float(np.max(scaled)),
    }
    if not report["min_ratio"] > 0:
        raise AssertionError("growth law violated: non-positive ratio")
    return report


def defining_function_check(d_samples: np.ndarray, h: float) -> dict:
    """Finite-difference bounds on ``|d''|`` and ``d^{m-1} |d^{(m)}|`` for m = 1, 2.

    ``bounded`` compares each bound against the same bound on the 2h subsample.
    """
    def bounds(d, hh):
        d1 = (d[2:] - d[:-2]) / (2 * hh)
        d2 = (d[2:] - 2 * d[1:-1] + d[:-2]) / hh**2
        mid = d[1:-1]
        return {"sup_d2": float(np.max(np.abs(d2))),
                "sup_m1": float(np.max(np.abs(d1))),
                "sup_m2": float(np.max(np.abs(mid * d2)))}

    d = np.asarray(d_samples, dtype=float)
    fine = bounds(d, h)
    coarse = bounds(d[::2], 2 * h)
    bounded = all(fine[k] <= 1.25 * coarse[k] + 1e-12 for k in fine)
    return {**fine, "coarse": coarse, "bounded": bounded}
