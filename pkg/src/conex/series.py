"""Poly-log series in one variable.

A ``PolyLogSeries`` is a finite sum ``sum c[e, j] * t**e * log(t)**j`` with real
exponents ``e >= 0`` and integer log powers ``j >= 0``, plus a formal truncation
order: the represented function is the sum up to ``O(t**order)``.  It is the
common container for expansions in the boundary distance ``d_S`` and in the
radial variable ``r``.

Exponents coming out of eigenvalue computations are inexact floats, so two
exponents closer than ``exp_tol`` are treated as the same slot and merged.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

EXP_TOL = 1e-9
LOG_CAP = 32


class LogDegreeOverflow(ValueError):
    pass


@dataclass(frozen=True)
class PolyLogSeries:
    terms: Mapping[tuple[float, int], float] = field(default_factory=dict)
    order: float = math.inf
    exp_tol: float = EXP_TOL

    def __post_init__(self):
        if not self.exp_tol > 0:
            raise ValueError("exp_tol must be positive")
        merged = _merge(self.terms.items(), self.exp_tol, self.order)
        object.__setattr__(self, "terms", merged)

    # -- construction -----------------------------------------------------

    @classmethod
    def monomial(cls, coeff: float, exponent: float, logpow: int = 0,
                 order: float = math.inf, exp_tol: float = EXP_TOL) -> "PolyLogSeries":
        return cls({(exponent, logpow): coeff}, order=order, exp_tol=exp_tol)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, int, float]],
                   order: float = math.inf, exp_tol: float = EXP_TOL) -> "PolyLogSeries":
        """Build from ``(exponent, logpow, coeff)`` triples; repeated slots add."""
        acc: dict[tuple[float, int], float] = {}
        for e, j, c in pairs:
            acc[(e, j)] = acc.get((e, j), 0.0) + c
        return cls(acc, order=order, exp_tol=exp_tol)

    # -- queries ----------------------------------------------------------

    @property
    def exponents(self) -> list[float]:
        return sorted({e for e, _ in self.terms})

    @property
    def min_exponent(self) -> float:
        return min((e for e, _ in self.terms), default=math.inf)

    @property
    def max_logpow(self) -> int:
        return max((j for _, j in self.terms), default=0)

    def coeff(self, exponent: float, logpow: int = 0) -> float:
        for (e, j), c in self.terms.items():
            if j == logpow and abs(e - exponent) < self.exp_tol:
                return c
        return 0.0

    def logpows_at(self, exponent: float) -> list[int]:
        return sorted(j for (e, j) in self.terms if abs(e - exponent) < self.exp_tol)

    def is_empty(self) -> bool:
        return not self.terms

    def truncate(self, order: float) -> "PolyLogSeries":
        return PolyLogSeries(self.terms, order=min(order, self.order), exp_tol=self.exp_tol)

    # -- algebra ----------------------------------------------------------

    def __add__(self, other: "PolyLogSeries") -> "PolyLogSeries":
        if not isinstance(other, PolyLogSeries):
            return NotImplemented
        items = list(self.terms.items()) + list(other.terms.items())
        return PolyLogSeries(_sum_items(items), order=min(self.order, other.order),
                             exp_tol=self.exp_tol)

    def __neg__(self) -> "PolyLogSeries":
        return self.scale(-1.0)

    def __sub__(self, other: "PolyLogSeries") -> "PolyLogSeries":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, PolyLogSeries):
            return series_mul(self, other)
        if isinstance(other, (int, float)):
            return self.scale(float(other))
        return NotImplemented

    __rmul__ = __mul__

    def scale(self, c: float) -> "PolyLogSeries":
        return PolyLogSeries({k: c * v for k, v in self.terms.items()},
                             order=self.order, exp_tol=self.exp_tol)

    def shift(self, a: float) -> "PolyLogSeries":
        """Multiply by ``t**a``."""
        return PolyLogSeries({(e + a, j): c for (e, j), c in self.terms.items()},
                             order=self.order + a, exp_tol=self.exp_tol)

    def __call__(self, t):
        return series_eval(self, t)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        terms = [{"e": e, "j": j, "c": c} for (e, j), c in sorted(self.terms.items())]
        order = None if math.isinf(self.order) else self.order
        return {"terms": terms, "order": order, "exp_tol": self.exp_tol}

    @classmethod
    def from_dict(cls, data: Mapping) -> "PolyLogSeries":
        order = data.get("order")
        return cls.from_pairs(((float(t["e"]), int(t["j"]), float(t["c"])) for t in data["terms"]),
                              order=math.inf if order is None else float(order),
                              exp_tol=float(data.get("exp_tol", EXP_TOL)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PolyLogSeries":
        return cls.from_dict(json.loads(text))

    def __repr__(self) -> str:
        parts = []
        for (e, j), c in sorted(self.terms.items()):
            s = f"{c:+.6g}*t^{e:g}"
            if j:
                s += f"*log(t)^{j}"
            parts.append(s)
        body = " ".join(parts) if parts else "0"
        if not math.isinf(self.order):
            body += f" + O(t^{self.order:g})"
        return f"PolyLogSeries({body})"


def _sum_items(items) -> dict:
    acc: dict[tuple[float, int], float] = {}
    for k, v in items:
        acc[k] = acc.get(k, 0.0) + v
    return acc


def _merge(items, exp_tol: float, order: float) -> dict:
    """Snap exponents to representatives closer than ``exp_tol`` and sum coefficients."""
    reps: list[float] = []
    out: dict[tuple[float, int], float] = {}
    for (e, j), c in sorted(items, key=lambda kv: kv[0]):
        e = float(e)
        j = int(j)
        c = float(c)
        if e < -exp_tol:
            raise ValueError(f"negative exponent {e}")
        if j < 0:
            raise ValueError(f"negative log power {j}")
        if j > LOG_CAP:
            raise LogDegreeOverflow("log-degree overflow")
        if not math.isfinite(c):
            raise ValueError(f"non-finite coefficient at t^{e} log^{j}")
        pos = bisect.bisect_left(reps, e - exp_tol)
        if pos < len(reps) and abs(reps[pos] - e) < exp_tol:
            e = reps[pos]
        else:
            e = max(e, 0.0)
            reps.insert(bisect.bisect_left(reps, e), e)
        if e > order + exp_tol:
            continue
        out[(e, j)] = out.get((e, j), 0.0) + c
    return {k: v for k, v in out.items() if v != 0.0}


def series_mul(a: PolyLogSeries, b: PolyLogSeries) -> PolyLogSeries:
    """Product of two series: exponents add, log powers add.

    The result is truncated at ``min(a.order + min_exp(b), b.order + min_exp(a))``.
    """
    order = min(a.order + b.min_exponent, b.order + a.min_exponent)
    acc: dict[tuple[float, int], float] = {}
    for (ea, ja), ca in a.terms.items():
        for (eb, jb), cb in b.terms.items():
            e = ea + eb
            if e > order + a.exp_tol:
                continue
            j = ja + jb
            if j > LOG_CAP:
                raise LogDegreeOverflow("log-degree overflow")
            acc[(e, j)] = acc.get((e, j), 0.0) + ca * cb
    return PolyLogSeries(acc, order=order, exp_tol=a.exp_tol)


def series_compose(germ: Sequence[float], w: PolyLogSeries,
                   polynomial: bool = False) -> PolyLogSeries:
    """Evaluate ``G(w) = sum germ[m] * w**m`` in the series algebra.

    ``w`` must vanish at ``t = 0`` (strictly positive minimum exponent).  By
    default ``germ`` is a truncated Taylor expansion, so the neglected terms
    ``O(w**len(germ))`` cap the truncation order; pass ``polynomial=True``
    when ``G`` is exactly the given polynomial.
    """
    if any(e < w.exp_tol for e, _ in w.terms):
        raise ValueError("composition base has a zero-exponent term; shift to the constant first")
    order = w.order
    if not polynomial and not w.is_empty():
        order = min(order, len(germ) * w.min_exponent)
    wt = w.truncate(order)
    result = PolyLogSeries({}, order=order, exp_tol=w.exp_tol)
    power = PolyLogSeries({(0.0, 0): 1.0}, order=order, exp_tol=w.exp_tol)
    for m, g in enumerate(germ):
        if m > 0:
            power = series_mul(power, wt).truncate(order)
            if power.is_empty():
                break
        if g != 0.0:
            result = result + power.scale(g)
    return result.truncate(order)


def series_eval(s: PolyLogSeries, t):
    """Evaluate at ``t > 0`` (scalar or array), largest exponents first."""
    import numpy as np

    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValueError("series_eval requires t > 0")
    logt = np.log(t_arr)
    total = np.zeros_like(t_arr)
    for (e, j), c in sorted(s.terms.items(), key=lambda kv: (-kv[0][0], -kv[0][1])):
        total = total + c * t_arr**e * logt**j
    if np.ndim(t) == 0:
        return float(total)
    return total
