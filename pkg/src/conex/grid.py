from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on an open interval ``(a, b)`` that never touches the endpoints.

    ``cell-centered`` puts nodes at cell midpoints (first node at ``h/2``);
    ``endpoint-offset`` uses the ``count`` interior vertices of a ``count + 1``
    cell partition (first node at ``h``).
    """

    a: float
    b: float
    count: int
    scheme: str = "cell-centered"

    def __post_init__(self):
        if self.count < 16:
            raise ValueError(f"grid count must be >= 16, got {self.count}")
        if not self.b > self.a:
            raise ValueError("empty interval")
        if self.scheme not in ("cell-centered", "endpoint-offset"):
            raise ValueError(f"unknown grid scheme {self.scheme!r}")

    @property
    def h(self) -> float:
        if self.scheme == "cell-centered":
            return (self.b - self.a) / self.count
        return (self.b - self.a) / (self.count + 1)

    @property
    def nodes(self) -> np.ndarray:
        h = self.h
        if self.scheme == "cell-centered":
            return self.a + (np.arange(self.count) + 0.5) * h
        return self.a + (np.arange(self.count) + 1.0) * h

    @property
    def length(self) -> float:
        return self.b - self.a

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.a, self.b, self.count * factor, self.scheme)
