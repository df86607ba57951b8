"""Graded stream-function grids and non-uniform finite-difference stencils."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError


@dataclass
class PsiGrid:
    """Graded grid on [0, psi_max] with nodes psi_j = psi_max * (j/n)**grading.

    grading >= 1 concentrates nodes at the wall, where the transformed
    equation degenerates.  Treat instances as immutable.
    """

    psi_max: float
    n: int
    grading: float = 2.0
    nodes: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.nodes is None:
            if self.psi_max <= 0:
                raise ModelError(f"psi_max must be positive, got {self.psi_max}")
            if self.n < 2:
                raise ModelError("grid needs at least 3 nodes")
            if self.grading < 1.0:
                raise ModelError(f"grading must be >= 1, got {self.grading}")
            j = np.arange(self.n + 1, dtype=float)
            self.nodes = self.psi_max * (j / self.n) ** self.grading
            self.nodes[0] = 0.0
            self.nodes[-1] = self.psi_max
        else:
            self.nodes = np.asarray(self.nodes, dtype=float)
            self.n = len(self.nodes) - 1
            self.psi_max = float(self.nodes[-1])
        if np.any(np.diff(self.nodes) <= 0):
            raise ModelError("grid nodes must be strictly increasing")
        self._d2 = None
        self._wall = None

    @classmethod
    def from_nodes(cls, nodes):
        """Rebuild a grid from explicit node positions (e.g. a snapshot file)."""
        nodes = np.asarray(nodes, dtype=float)
        return cls(psi_max=float(nodes[-1]), n=len(nodes) - 1,
                   grading=float("nan"), nodes=nodes)

    # -- stencils ---------------------------------------------------------

    def d2_coeffs(self):
        """Three-point second-difference weights at interior nodes.

        Returns (lo, mid, hi) so that (D2 w)_j = lo_j w_{j-1} + mid_j w_j
        + hi_j w_{j+1} for j = 1..n-1.  Exact on quadratics.
        """
        if self._d2 is None:
            psi = self.nodes
            hm = psi[1:-1] - psi[:-2]
            hp = psi[2:] - psi[1:-1]
            lo = 2.0 / (hm * (hm + hp))
            mid = -2.0 / (hm * hp)
            hi = 2.0 / (hp * (hm + hp))
            self._d2 = (lo, mid, hi)
        return self._d2

    def second_difference(self, w):
        lo, mid, hi = self.d2_coeffs()
        return lo * w[:-2] + mid * w[1:-1] + hi * w[2:]

    def wall_stencil(self):
        """One-sided first-derivative weights at psi=0 using nodes 0, 1, 2.

        Second order: exact on quadratics in psi.
        """
        if self._wall is None:
            psi = self.nodes
            h1 = psi[1] - psi[0]
            h2 = psi[2] - psi[1]
            c0 = -(2.0 * h1 + h2) / (h1 * (h1 + h2))
            c1 = (h1 + h2) / (h1 * h2)
            c2 = -h1 / (h2 * (h1 + h2))
            self._wall = (c0, c1, c2)
        return self._wall

    def centered_gradient(self, w):
        """First derivative at interior nodes by centered differences."""
        psi = self.nodes
        return (w[2:] - w[:-2]) / (psi[2:] - psi[:-2])
