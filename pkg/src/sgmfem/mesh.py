"""Uniform square-cell meshes of the unit square.

Cells are numbered row by row, ``e = ey * n + ex`` with ``n = 2**level``
cells per side; vertices likewise, ``v = iy * (n + 1) + ix``.  Boundary
conditions are attached to boundary *edges*; a vertex touching a
Dirichlet edge is constrained.
"""
from dataclasses import dataclass, field

import numpy as np

SIDES = ("bottom", "right", "top", "left")


@dataclass(frozen=True)
class BcConfig:
    """Which sides of the unit square carry a homogeneous Neumann condition.

    All remaining sides are (homogeneous) Dirichlet.
    """

    neumann_edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset(self.neumann_edges)
        unknown = edges - set(SIDES)
        if unknown:
            raise ValueError(f"unknown sides {sorted(unknown)}; expected a subset of {SIDES}")
        if len(edges) == len(SIDES):
            raise ValueError("at least one side must be Dirichlet")
        object.__setattr__(self, "neumann_edges", edges)

    @property
    def dirichlet_edges(self):
        return frozenset(s for s in SIDES if s not in self.neumann_edges)

    def is_dirichlet(self, side):
        return side not in self.neumann_edges


@dataclass(frozen=True, eq=False)
class Mesh:
    level: int
    bc: BcConfig
    vertices: np.ndarray
    elements: np.ndarray
    boundary_edges: np.ndarray
    boundary_sides: np.ndarray
    boundary_tags: np.ndarray

    @property
    def n(self):
        """Cells per side."""
        return 2 ** self.level

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def n_elements(self):
        return self.elements.shape[0]

    @property
    def centers(self):
        """Cell midpoints, shape (n_elements, 2)."""
        idx = np.arange(self.n) + 0.5
        cx, cy = np.meshgrid(idx * self.h, idx * self.h)
        return np.column_stack([cx.ravel(), cy.ravel()])

    def element_areas(self):
        v = self.vertices[self.elements]
        dx = v[:, 1, 0] - v[:, 0, 0]
        dy = v[:, 3, 1] - v[:, 0, 1]
        return dx * dy

    def dirichlet_edge_mask(self):
        return self.boundary_tags == "D"

    def __repr__(self):
        return f"Mesh(level={self.level}, n_elements={self.n_elements}, neumann={sorted(self.bc.neumann_edges)})"


def _boundary(n, bc):
    edges, sides = [], []
    for i in range(n):
        edges.append((i, i + 1))
        sides.append("bottom")
    for j in range(n):
        edges.append((j * (n + 1) + n, (j + 1) * (n + 1) + n))
        sides.append("right")
    for i in range(n):
        edges.append((n * (n + 1) + i, n * (n + 1) + i + 1))
        sides.append("top")
    for j in range(n):
        edges.append((j * (n + 1), (j + 1) * (n + 1)))
        sides.append("left")
    sides = np.array(sides)
    tags = np.where(np.isin(sides, list(bc.neumann_edges)), "N", "D")
    return np.array(edges, dtype=np.int64), sides, tags


def build_unit_square(level, bc=None):
    """Uniform ``2**level x 2**level`` grid of (0,1)^2 with tagged boundary."""
    if level < 0 or int(level) != level:
        raise ValueError(f"level must be a nonnegative integer, got {level!r}")
    level = int(level)
    bc = BcConfig() if bc is None else bc
    n = 2 ** level
    t = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(t, t)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    ex, ey = np.meshgrid(np.arange(n), np.arange(n))
    v0 = (ey * (n + 1) + ex).ravel()
    elements = np.column_stack([v0, v0 + 1, v0 + n + 2, v0 + n + 1])
    edges, sides, tags = _boundary(n, bc)
    return Mesh(level, bc, vertices, elements, edges, sides, tags)


def refine_uniform(mesh):
    """Split every cell into four; tags are inherited side by side."""
    return build_unit_square(mesh.level + 1, mesh.bc)
