"""Uniform cell-centered grid on the symmetric interval [-R, R]."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    """M uniform cells on [-R, R]; nodes sit at cell centers.

    Cell-centered nodes make the uniform-weight quadrature sum a composite
    midpoint rule on exactly [-R, R], which keeps both the discrete mass
    identity and second-order accuracy without special end weights.
    """

    R: float
    M: int
    h: float = field(init=False)
    nodes: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.R <= 0.0:
            raise ValueError("grid half-width R must be positive")
        if self.M < 3:
            raise ValueError("grid needs at least 3 nodes")
        h = 2.0 * self.R / self.M
        object.__setattr__(self, "h", h)
        nodes = -self.R + h * (np.arange(self.M) + 0.5)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def faces(self) -> np.ndarray:
        """Cell interfaces, length M + 1, spanning [-R, R]."""
        return -self.R + self.h * np.arange(self.M + 1)

    def refined(self, factor: int) -> "Grid1D":
        return Grid1D(self.R, self.M * factor)
