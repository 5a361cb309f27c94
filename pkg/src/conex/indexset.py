"""Exponent index sets for the radial expansion.

``I`` is the additive monoid generated by ``{2, (n-2)/2, m_1, m_2, ...}`` (the
``m_i`` being positive indicial roots), cut off at a finite exponent.  ``J`` is
the smaller set closed under the rules coming from the nonlinearity:

* every ``m_i`` is in ``J``;
* ``(n-2)/2 + a + b + l((n-2)/2 + c)`` is in ``J`` for ``a, b, c`` in ``J`` and ``l >= 0``;
* ``a + 2`` is in ``J`` when ``k != n``.

All sets are float-valued; values closer than ``exp_tol`` are merged.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .series import EXP_TOL, PolyLogSeries

MAX_ELEMENTS = 200_000


@dataclass(frozen=True)
class ExponentSet:
    elements: tuple[float, ...]
    generators: tuple[float, ...]
    cutoff: float
    kind: str
    exp_tol: float = EXP_TOL

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def index_of(self, a: float) -> int:
        i = bisect.bisect_left(self.elements, a - self.exp_tol)
        if i < len(self.elements) and abs(self.elements[i] - a) < self.exp_tol:
            return i
        raise KeyError(f"{a!r} is not in the index set")

    def __contains__(self, a: float) -> bool:
        try:
            self.index_of(a)
        except KeyError:
            return False
        return True

    def to_list(self) -> list[float]:
        return list(self.elements)


class _SortedMerged:
    """Sorted float list that refuses near-duplicates."""

    def __init__(self, tol: float):
        self.tol = tol
        self.items: list[float] = []

    def add(self, x: float) -> bool:
        i = bisect.bisect_left(self.items, x - self.tol)
        if i < len(self.items) and abs(self.items[i] - x) < self.tol:
            return False
        self.items.insert(bisect.bisect_left(self.items, x), x)
        if len(self.items) > MAX_ELEMENTS:
            raise OverflowError("index set too large; lower the cutoff")
        return True


def monoid_generate(generators: Iterable[float], cutoff: float,
                    exp_tol: float = EXP_TOL) -> ExponentSet:
    gens = sorted(float(g) for g in generators)
    if any(g <= exp_tol for g in gens):
        raise ValueError("degenerate monoid: generators must exceed exp_tol")
    if not cutoff < 64:
        raise ValueError("cutoff must be < 64")
    acc = _SortedMerged(exp_tol)
    acc.add(0.0)
    frontier = [0.0]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = x + g
                if y <= cutoff + exp_tol and acc.add(y):
                    nxt.append(y)
        frontier = nxt
    return ExponentSet(tuple(acc.items), tuple(gens), float(cutoff), "monoid-I", exp_tol)


def exponent_monoid(n: int, mbars: Sequence[float], cutoff: float,
                    exp_tol: float = EXP_TOL) -> ExponentSet:
    """``I`` for the Loewner-Nirenberg cone problem in dimension ``n``."""
    gens = [2.0, (n - 2) / 2.0] + [m for m in mbars if m <= cutoff + exp_tol]
    return monoid_generate([g for g in gens if g > exp_tol], cutoff, exp_tol)


def j_closure(mbars: Iterable[float], n: int, k: int, cutoff: float, l_min: int = 0,
              exp_tol: float = EXP_TOL) -> ExponentSet:
    """Least set containing ``mbars`` and closed under the nonlinear interaction rules.

    ``l_min`` selects whether the ``l`` in ``(n-2)/2 + a + b + l((n-2)/2 + c)``
    starts at 0 (default) or 1.
    """
    if l_min not in (0, 1):
        raise ValueError("l_min must be 0 or 1")
    beta = (n - 2) / 2.0
    acc = _SortedMerged(exp_tol)
    for m in sorted(mbars):
        if m <= cutoff + exp_tol:
            acc.add(float(m))
    lim = cutoff + exp_tol
    changed = True
    while changed:
        changed = False
        cur = list(acc.items)
        for ia, a in enumerate(cur):
            if k != n and a + 2.0 <= lim:
                changed |= acc.add(a + 2.0)
            for b in cur[ia:]:
                base = beta + a + b
                if base > lim:
                    break
                for c in cur:
                    step = beta + c
                    if step <= 0:
                        raise ValueError("closure step must be positive")
                    l = l_min
                    while base + l * step <= lim:
                        changed |= acc.add(base + l * step)
                        l += 1
                    if l == l_min and l_min > 0:
                        break
    return ExponentSet(tuple(acc.items), tuple(sorted(float(m) for m in mbars)), float(cutoff),
                       "closure-J", exp_tol)


def neighbors(s: ExponentSet, a: float) -> tuple[Optional[float], Optional[float]]:
    """``(a^-, a^+)``: the adjacent elements, ``None`` where absent."""
    i = s.index_of(a)
    lo = s.elements[i - 1] if i > 0 else None
    hi = s.elements[i + 1] if i + 1 < len(s.elements) else None
    return lo, hi


def n_floor(l: int, n: int) -> int:
    """Log multiplicity ``floor(l/n)`` of the ``d_S^l`` slot."""
    return l // n


def log_multiplicities(I: ExponentSet, mbars: Sequence[float], n: int, k: int) -> dict[float, int]:
    """Formal log multiplicities ``N~_a`` for every ``a`` in ``I``.

    Coefficients are treated as generic: each slot of ``v`` is carried with
    coefficient 1, so products never cancel and the support of the forcing

        r^b v^2 F(r^b v) - r^2 Delta' v,   b = (n-2)/2,

    is exactly the set of nonzero terms of a positive-coefficient series.  A
    value of -1 means the slot carries no term.  The constant slot is kept at
    ``N~_0 = 0`` for bookkeeping but never enters ``v`` (``v`` vanishes at r = 0).
    """
    tol = I.exp_tol
    beta = (n - 2) / 2.0
    mset = sorted(mbars)
    out: dict[float, int] = {}
    v = PolyLogSeries({}, exp_tol=tol)
    for a in I.elements:
        if a < tol:
            out[a] = 0
            continue
        forcing = _forcing_support(v, beta, k != n, a, tol)
        logs = forcing.logpows_at(a)
        resonant = any(abs(a - m) < tol for m in mset)
        if resonant:
            count = max(logs) + 1 if logs else 0
        else:
            count = max(logs) if logs else -1
        out[a] = count
        if count >= 0:
            v = v + PolyLogSeries({(a, j): 1.0 for j in range(count + 1)}, exp_tol=tol)
    return out


def _forcing_support(v: PolyLogSeries, beta: float, tangential: bool, upto: float,
                     tol: float) -> PolyLogSeries:
    """Positive-coefficient series whose support is that of the forcing, up to ``upto``."""
    total = PolyLogSeries({}, exp_tol=tol)
    if v.is_empty():
        return total
    vt = v.truncate(upto)
    mexp = vt.min_exponent
    if tangential:
        total = total + vt.shift(2.0).truncate(upto)
    power = (vt * vt).truncate(upto)  # v^{m+2} for m = 0
    m = 0
    while not power.is_empty() and beta * (m + 1) + (m + 2) * mexp <= upto + tol:
        total = total + power.shift(beta * (m + 1)).truncate(upto)
        power = (power * vt).truncate(upto)
        m += 1
    return total
