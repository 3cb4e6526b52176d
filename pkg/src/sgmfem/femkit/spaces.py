"""Scalar finite element spaces on uniform square grids.

Every space is described by a local basis on the reference cell [-1, 1]^2
and a cell-to-dof map.  All cells are congruent, so one reference
tabulation serves the whole mesh.  Vector displacement spaces are two
copies of a scalar space, x-components first.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

# 1D shape functions on [-1, 1]; each returns (values, derivatives).


def _lin0(t):
    return 0.5 * (1 - t), -0.5 * np.ones_like(t)


def _lin1(t):
    return 0.5 * (1 + t), 0.5 * np.ones_like(t)


def _quad_nodes(t):
    vals = np.stack([0.5 * t * (t - 1), 1 - t * t, 0.5 * t * (t + 1)], axis=-1)
    ders = np.stack([t - 0.5, -2 * t, t + 0.5], axis=-1)
    return vals, ders


def _bubble2(t):
    return 1 - t * t, -2 * t


def _bubble3(t):
    return t * (1 - t * t), 1 - 3 * t * t


@dataclass(frozen=True, eq=False)
class ScalarSpace:
    """A scalar FE space on the uniform grid with ``n`` cells per side.

    ``tabulate(ref_pts)`` returns basis values (nq, nloc) and *physical*
    gradients (nq, nloc, 2) of the local basis, identical on every cell.
    """

    name: str
    n: int
    cell_dofs: np.ndarray
    ndofs: int
    side_dofs: dict
    _tabulate: Callable
    continuous: bool = True

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def nloc(self):
        return self.cell_dofs.shape[1]

    def tabulate(self, ref_pts):
        ref_pts = np.asarray(ref_pts, dtype=float)
        vals, rgrads = self._tabulate(ref_pts[:, 0], ref_pts[:, 1], self.h)
        return vals, rgrads * (2.0 / self.h)

    def dofs_on_sides(self, sides):
        if not sides:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate([self.side_dofs[s] for s in sides]))

    def evaluate(self, coeffs, ref_pts):
        """Field values and gradients at reference points of every cell.

        ``coeffs`` may carry leading batch axes: shape (..., ndofs) gives
        values (..., nel, nq) and gradients (..., nel, nq, 2).
        """
        vals, grads = self.tabulate(ref_pts)
        local = np.asarray(coeffs)[..., self.cell_dofs]
        u = np.einsum("...ei,qi->...eq", local, vals)
        g = np.einsum("...ei,qid->...eqd", local, grads)
        return u, g


def _nodal_side_dofs(m):
    grid = np.arange((m + 1) ** 2).reshape(m + 1, m + 1)
    return {
        "bottom": grid[0, :].copy(),
        "top": grid[m, :].copy(),
        "left": grid[:, 0].copy(),
        "right": grid[:, m].copy(),
    }


def _tab_q2(x, y, h):
    vx, dx = _quad_nodes(x)
    vy, dy = _quad_nodes(y)
    vals = (vy[:, :, None] * vx[:, None, :]).reshape(len(x), 9)
    gx = (vy[:, :, None] * dx[:, None, :]).reshape(len(x), 9)
    gy = (dy[:, :, None] * vx[:, None, :]).reshape(len(x), 9)
    return vals, np.stack([gx, gy], axis=-1)


def _tab_q1(x, y, h):
    fx = [_lin0(x), _lin1(x)]
    fy = [_lin0(y), _lin1(y)]
    vals, gx, gy = [], [], []
    for j in range(2):
        for i in range(2):
            vals.append(fx[i][0] * fy[j][0])
            gx.append(fx[i][1] * fy[j][0])
            gy.append(fx[i][0] * fy[j][1])
    vals = np.stack(vals, axis=-1)
    return vals, np.stack([np.stack(gx, -1), np.stack(gy, -1)], axis=-1)


def _tab_pminus1(x, y, h):
    # {1, x - x_K, y - y_K}; gradients returned in reference scaling
    one = np.ones_like(x)
    zero = np.zeros_like(x)
    vals = np.stack([one, 0.5 * h * x, 0.5 * h * y], axis=-1)
    gx = np.stack([zero, 0.5 * h * one, zero], axis=-1)
    gy = np.stack([zero, zero, 0.5 * h * one], axis=-1)
    return vals, np.stack([gx, gy], axis=-1)


def _tab_p2_complement(x, y, h):
    # local quadratics L2-orthogonal to P1 on the cell
    zero = np.zeros_like(x)
    vals = np.stack([x * x - 1.0 / 3.0, x * y, y * y - 1.0 / 3.0], axis=-1)
    gx = np.stack([2 * x, y, zero], axis=-1)
    gy = np.stack([zero, x, 2 * y], axis=-1)
    return vals, np.stack([gx, gy], axis=-1)


def _hier_tab(edge_fn, interior):
    """Edge modes (bottom, top, left, right) from ``edge_fn`` times linears,
    followed by interior products listed in ``interior``."""

    def tab(x, y, h):
        ex, dex = edge_fn(x)
        ey, dey = edge_fn(y)
        l0x, d0x = _lin0(x)
        l1x, d1x = _lin1(x)
        l0y, d0y = _lin0(y)
        l1y, d1y = _lin1(y)
        vals = [ex * l0y, ex * l1y, l0x * ey, l1x * ey]
        gx = [dex * l0y, dex * l1y, d0x * ey, d1x * ey]
        gy = [ex * d0y, ex * d1y, l0x * dey, l1x * dey]
        for fx, fy in interior:
            vx, dx = fx(x)
            vy, dy = fy(y)
            vals.append(vx * vy)
            gx.append(dx * vy)
            gy.append(vx * dy)
        vals = np.stack(vals, axis=-1)
        return vals, np.stack([np.stack(gx, -1), np.stack(gy, -1)], axis=-1)

    return tab


def q2_space(n):
    """Continuous biquadratic Lagrange space (nodes at half-cell spacing)."""
    m = 2 * n
    ex, ey = np.meshgrid(np.arange(n), np.arange(n))
    base = (2 * ey * (m + 1) + 2 * ex).ravel()
    offs = np.array([j * (m + 1) + i for j in range(3) for i in range(3)])
    cell_dofs = base[:, None] + offs[None, :]
    return ScalarSpace("Q2", n, cell_dofs, (m + 1) ** 2, _nodal_side_dofs(m), _tab_q2)


def q1_space(n):
    """Continuous bilinear Lagrange space."""
    ex, ey = np.meshgrid(np.arange(n), np.arange(n))
    base = (ey * (n + 1) + ex).ravel()
    offs = np.array([0, 1, n + 1, n + 2])
    cell_dofs = base[:, None] + offs[None, :]
    return ScalarSpace("Q1", n, cell_dofs, (n + 1) ** 2, _nodal_side_dofs(n), _tab_q1)


def pminus1_space(n):
    """Discontinuous linear space, local basis {1, x - x_K, y - y_K}."""
    nel = n * n
    cell_dofs = np.arange(3 * nel).reshape(nel, 3)
    empty = {s: np.zeros(0, dtype=np.int64) for s in ("bottom", "top", "left", "right")}
    return ScalarSpace("P-1", n, cell_dofs, 3 * nel, empty, _tab_pminus1, continuous=False)


def _hier_dofmap(n, n_interior):
    nh = n * (n + 1)  # horizontal edges: (row line j, column i)
    nv = (n + 1) * n  # vertical edges: (row i, column line j)
    ex, ey = np.meshgrid(np.arange(n), np.arange(n))
    ex, ey = ex.ravel(), ey.ravel()
    bottom = ey * n + ex
    top = (ey + 1) * n + ex
    left = nh + ey * (n + 1) + ex
    right = nh + ey * (n + 1) + ex + 1
    cols = [bottom, top, left, right]
    e = np.arange(n * n)
    for k in range(n_interior):
        cols.append(nh + nv + n_interior * e + k)
    cell_dofs = np.column_stack(cols)
    i = np.arange(n)
    side = {
        "bottom": i,
        "top": n * n + i,
        "left": nh + i * (n + 1),
        "right": nh + i * (n + 1) + n,
    }
    return cell_dofs, nh + nv + n_interior * n * n, side


def q3_hierarchical_detail_space(n):
    """Degree-3 hierarchical modes completing Q2 to Q3 (4 edge + 3 interior)."""
    cell_dofs, ndofs, side = _hier_dofmap(n, 3)
    tab = _hier_tab(_bubble3, [(_bubble3, _bubble2), (_bubble2, _bubble3), (_bubble3, _bubble3)])
    return ScalarSpace("Q3\\Q2", n, cell_dofs, ndofs, side, tab)


def q2_hierarchical_detail_space(n):
    """Quadratic hierarchical modes completing Q1 to Q2 (4 edge + 1 interior)."""
    cell_dofs, ndofs, side = _hier_dofmap(n, 1)
    tab = _hier_tab(_bubble2, [(_bubble2, _bubble2)])
    return ScalarSpace("Q2\\Q1", n, cell_dofs, ndofs, side, tab)


def p2_complement_space(n):
    """Discontinuous quadratics orthogonal to P1 on each cell (3 per cell)."""
    nel = n * n
    cell_dofs = np.arange(3 * nel).reshape(nel, 3)
    empty = {s: np.zeros(0, dtype=np.int64) for s in ("bottom", "top", "left", "right")}
    return ScalarSpace("P2\\P1", n, cell_dofs, 3 * nel, empty, _tab_p2_complement, continuous=False)


def nodal_coordinates(space):
    """Coordinates of Lagrange nodes for Q1/Q2 spaces."""
    if space.name == "Q2":
        m = 2 * space.n
    elif space.name == "Q1":
        m = space.n
    else:
        raise ValueError(f"{space.name} has no nodal coordinates")
    t = np.linspace(0.0, 1.0, m + 1)
    X, Y = np.meshgrid(t, t)
    return np.column_stack([X.ravel(), Y.ravel()])
