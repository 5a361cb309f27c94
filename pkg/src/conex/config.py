"""Run configurations: one dataclass per CLI task, built from JSON dictionaries."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from dataclasses import field as dc_field
from typing import Any, Optional


class ConfigError(ValueError):
    pass


@dataclass
class _Base:
    task: str = ""
    out: Optional[str] = None

    @classmethod
    def from_dict(cls, raw: dict[str, Any]):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ConfigError(f"unknown config keys for task {raw.get('task')!r}: {unknown}")
        try:
            cfg = cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        pass

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ProfileConfig(_Base):
    n: int = 3
    alpha: float = math.pi
    M: float = 1.0
    grid: int = 4096
    fit_window: float = 0.1
    tol: float = 1e-10


@dataclass
class SpectrumConfig(_Base):
    """``mu`` selects the Liouville sector operator, ``n`` the profile operator,
    ``kappa`` the model operator ``-phi'' + kappa/d^2 phi``; exactly one is set."""

    mu: Optional[float] = None
    n: Optional[int] = None
    kappa: Optional[float] = None
    alpha: float = math.pi
    grid: int = 4096
    modes: int = 5
    extrapolate: bool = True

    def validate(self) -> None:
        chosen = [x for x in (self.mu, self.n, self.kappa) if x is not None]
        if len(chosen) != 1:
            raise ConfigError("spectrum needs exactly one of mu, n, kappa")


@dataclass
class IndicesConfig(_Base):
    n: int = 2
    k: int = 2
    mbars: Optional[list] = None
    lambdas: Optional[list] = None
    cutoff: float = 12.0
    l_min: int = 0
    exp_tol: float = 1e-9

    def validate(self) -> None:
        if (self.mbars is None) == (self.lambdas is None):
            raise ConfigError("indices needs exactly one of mbars, lambdas")


@dataclass
class RadialConfig(_Base):
    k: int = 2
    lam: float = 16.0
    M: float = 1.0
    r0: Optional[float] = None
    A0: float = 1.0
    forcing: Optional[dict] = None
    forcing_csv: Optional[str] = None
    decades: float = 6.0
    per_decade: int = 400

    def validate(self) -> None:
        if self.forcing is not None and self.forcing_csv is not None:
            raise ConfigError("give forcing or forcing_csv, not both")


@dataclass
class SimulateConfig(_Base):
    mu: float = 0.5
    M: float = 1.0
    grid_r: int = 128
    grid_t: int = 32
    mode: str = "blowup"
    r_min_ratio: float = 1e-3
    trace_eps: float = 0.0
    refine: int = 0
    modes: int = 3

    def validate(self) -> None:
        if self.mode not in ("blowup", "trace"):
            raise ConfigError("mode must be 'blowup' or 'trace'")
        if self.refine < 0:
            raise ConfigError("refine must be >= 0")


@dataclass
class OracleConfig(_Base):
    mu: float = 0.5
    M: float = 1.0
    grid_r: int = 400
    grid_t: int = 256
    r_min_ratio: float = 1e-4
    r_max_ratio: float = 0.5


@dataclass
class VerifyConfig(_Base):
    mu: float = 0.5
    M: float = 1.0
    field: Optional[str] = None
    grid_r: int = 400
    grid_t: int = 256
    r_min_ratio: float = 1e-4
    r_max_ratio: float = 0.5
    window: list = dc_field(default_factory=lambda: [1e-3, 1e-1])
    fit_window: list = dc_field(default_factory=lambda: [1e-2, 3e-1])
    modes: int = 3
    exponent_rtol: float = 0.01
    decay_rtol: float = 0.05
    eps_min: float = 0.1


TASKS = {
    "profile": ProfileConfig,
    "spectrum": SpectrumConfig,
    "indices": IndicesConfig,
    "radial": RadialConfig,
    "simulate": SimulateConfig,
    "oracle": OracleConfig,
    "verify": VerifyConfig,
}


def build_config(raw: dict[str, Any]):
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    task = raw.get("task")
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}; expected one of {sorted(TASKS)}")
    return TASKS[task].from_dict(raw)
