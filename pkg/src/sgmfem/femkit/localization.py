"""Element residual problems for the displacement detail estimator.

On each cell K the displacement residual is represented in the local
detail space by solving

    a0-bar_K(e_K, v) = (f, v)_K - (sigma_K, grad v)_K
                       + sum_{interior edges E of K} (1/2 (sigma_K + sigma_K') n_K, v)_E,

with ``sigma = alpha E eps(u) - p I`` built from the chaos blocks.  Averaged
tractions replace the unknown boundary fluxes; homogeneous traction data
gives no contribution on Neumann edges, and detail functions on Dirichlet
edges are removed.
"""
import numpy as np

from .quadrature import gauss_line, gauss_square, physical_points
from .spaces import _bubble2, _bubble3, _lin0, _lin1, _quad_nodes

SIDE_NORMALS = {"bottom": (0.0, -1.0), "right": (1.0, 0.0), "top": (0.0, 1.0), "left": (-1.0, 0.0)}
OPPOSITE = {"bottom": "top", "top": "bottom", "left": "right", "right": "left"}


def _option_one_basis():
    """Refined Q2 functions at the 16 non-coarse nodes of a 5x5 local node grid."""
    nodes = [(a, b) for b in range(5) for a in range(5) if not (a % 2 == 0 and b % 2 == 0)]

    def tab(pts):
        x, y = pts[:, 0], pts[:, 1]
        i = (x > 0).astype(int)
        j = (y > 0).astype(int)
        xi = 2 * x - (2 * i - 1)
        eta = 2 * y - (2 * j - 1)
        vx, dx = _quad_nodes(xi)
        vy, dy = _quad_nodes(eta)
        vals = np.zeros((len(x), len(nodes)))
        grads = np.zeros((len(x), len(nodes), 2))
        rows = np.arange(len(x))
        for m, (a, b) in enumerate(nodes):
            la, lb = a - 2 * i, b - 2 * j
            ok = (la >= 0) & (la <= 2) & (lb >= 0) & (lb <= 2)
            r, la, lb = rows[ok], la[ok], lb[ok]
            vals[r, m] = vx[r, la] * vy[r, lb]
            grads[r, m, 0] = 2 * dx[r, la] * vy[r, lb]
            grads[r, m, 1] = 2 * vx[r, la] * dy[r, lb]
        return vals, grads

    sides = {
        "bottom": [m for m, (a, b) in enumerate(nodes) if b == 0],
        "top": [m for m, (a, b) in enumerate(nodes) if b == 4],
        "left": [m for m, (a, b) in enumerate(nodes) if a == 0],
        "right": [m for m, (a, b) in enumerate(nodes) if a == 4],
    }
    return tab, sides, len(nodes)


def _option_two_basis():
    """Degree-3 hierarchical edge and interior modes of one cell."""

    def tab(pts):
        x, y = pts[:, 0], pts[:, 1]
        ex, dex = _bubble3(x)
        ey, dey = _bubble3(y)
        bx, dbx = _bubble2(x)
        by, dby = _bubble2(y)
        l0x, d0x = _lin0(x)
        l1x, d1x = _lin1(x)
        l0y, d0y = _lin0(y)
        l1y, d1y = _lin1(y)
        vals = [ex * l0y, ex * l1y, l0x * ey, l1x * ey, ex * by, bx * ey, ex * ey]
        gx = [dex * l0y, dex * l1y, d0x * ey, d1x * ey, dex * by, dbx * ey, dex * ey]
        gy = [ex * d0y, ex * d1y, l0x * dey, l1x * dey, ex * dby, bx * dey, ex * dey]
        return np.stack(vals, -1), np.stack([np.stack(gx, -1), np.stack(gy, -1)], -1)

    return tab, {"bottom": [0], "top": [1], "left": [2], "right": [3]}, 7


def _rules(option):
    """Composite area rule and per-side edge rules in coarse reference coordinates."""
    if option == "I":
        p, w = gauss_square(3)
        pts = np.concatenate([0.5 * p + [i - 0.5, j - 0.5] for j in (0, 1) for i in (0, 1)])
        wts = np.concatenate([0.25 * w] * 4)
        g, wl = gauss_line(3)
        t = np.concatenate([0.5 * g - 0.5, 0.5 * g + 0.5])
        tw = np.concatenate([0.5 * wl, 0.5 * wl])
    else:
        pts, wts = gauss_square(4)
        t, tw = gauss_line(4)
    one = np.ones_like(t)
    edges = {
        "bottom": np.column_stack([t, -one]),
        "top": np.column_stack([t, one]),
        "left": np.column_stack([-one, t]),
        "right": np.column_stack([one, t]),
    }
    return np.asarray(pts), np.asarray(wts), edges, np.asarray(tw)


class ElementResidualProblem:
    """Local detail problems on every cell of the coarse mesh."""

    def __init__(self, blocks, option):
        self.blocks = blocks
        self.option = option
        spaces = blocks.spaces
        mesh = spaces.mesh
        self.n = n = mesh.n
        h = mesh.h
        tab, side_local, nloc = _option_one_basis() if option == "I" else _option_two_basis()
        self.nloc = nloc
        self.pts, self.wts, self.edges, self.ewts = _rules(option)
        self.det = 0.25 * h * h
        self.vals, rg = tab(self.pts)
        self.grads = rg * (2.0 / h)
        self.edge_vals = {s: tab(p)[0] for s, p in self.edges.items()}
        Kloc = blocks.alpha * np.einsum("q,qid,qjd->ij", self.wts * self.det, self.grads, self.grads)
        Kvec = np.zeros((2 * nloc, 2 * nloc))
        Kvec[:nloc, :nloc] = Kloc
        Kvec[nloc:, nloc:] = Kloc
        # local dofs on Dirichlet boundary sides are removed
        ex, ey = np.meshgrid(np.arange(n), np.arange(n))
        ex, ey = ex.ravel(), ey.ravel()
        on_side = {"bottom": ey == 0, "top": ey == n - 1, "left": ex == 0, "right": ex == n - 1}
        self.on_side = on_side
        free = np.ones((n * n, nloc), dtype=bool)
        for s in mesh.bc.dirichlet_edges:
            free[np.ix_(on_side[s], side_local[s])] = False
        free = np.concatenate([free, free], axis=1)
        patterns, self.pattern_id = np.unique(free, axis=0, return_inverse=True)
        self.pattern_id = np.ravel(self.pattern_id)
        self.free = free
        self.Kinv = np.empty((len(patterns), 2 * nloc, 2 * nloc))
        for i, pat in enumerate(patterns):
            Kp = np.where(np.outer(pat, pat), Kvec, 0.0) + np.diag(~pat)
            self.Kinv[i] = np.linalg.inv(Kp) * np.outer(pat, pat)
        neighbours = {
            "bottom": (ey - 1) * n + ex,
            "top": (ey + 1) * n + ex,
            "left": ey * n + ex - 1,
            "right": ey * n + ex + 1,
        }
        self.neighbours = neighbours

    def _stress(self, fields, ref_pts):
        """Stress components (sxx, syy, sxy) of every chaos block at reference points."""
        b = self.blocks
        spaces = b.spaces
        N = spaces.disp.ndofs
        X = physical_points(spaces.mesh, ref_pts)
        P, _ = spaces.pres.evaluate(fields["p"], ref_pts)
        sxx = -P.copy()
        syy = -P.copy()
        sxy = np.zeros_like(P)
        for k, V in fields["terms"]:
            ek = b.coeff.evaluate(k, X)
            full = spaces.expand(V)
            _, gx = spaces.disp.evaluate(full[:, :N], ref_pts)
            _, gy = spaces.disp.evaluate(full[:, N:], ref_pts)
            sxx += b.alpha * ek * gx[..., 0]
            syy += b.alpha * ek * gy[..., 1]
            sxy += b.alpha * ek * 0.5 * (gx[..., 1] + gy[..., 0])
        return sxx, syy, sxy

    def residuals(self, fields, f_block):
        """Local load vectors, shape (n_blocks, n_cells, 2 * nloc).

        ``fields`` holds ``"p"`` (pressure blocks) and ``"terms"``, a list of
        ``(k, V_k)`` with ``V_k = G_k U`` the coupled displacement blocks;
        ``f_block`` is the row receiving the body force (or ``None``).
        """
        b = self.blocks
        sxx, syy, sxy = self._stress(fields, self.pts)
        w = self.wts * self.det
        gv = self.grads
        Rx = -np.einsum("beq,qi->bei", sxx * w, gv[..., 0]) - np.einsum("beq,qi->bei", sxy * w, gv[..., 1])
        Ry = -np.einsum("beq,qi->bei", sxy * w, gv[..., 0]) - np.einsum("beq,qi->bei", syy * w, gv[..., 1])
        if f_block is not None:
            fx = np.asarray(b.load_func(physical_points(b.spaces.mesh, self.pts)))
            Rx[f_block] += (fx[..., 0] * w) @ self.vals
            Ry[f_block] += (fx[..., 1] * w) @ self.vals
        h = b.spaces.mesh.h
        ew = self.ewts * 0.5 * h
        stress = {s: self._stress(fields, p) for s, p in self.edges.items()}
        for s, (nx, ny) in SIDE_NORMALS.items():
            interior = ~self.on_side[s]
            own = stress[s]
            nb = stress[OPPOSITE[s]]
            idx = self.neighbours[s][interior]
            tx = np.zeros(own[0].shape)
            ty = np.zeros(own[0].shape)
            sxx = 0.5 * (own[0][:, interior] + nb[0][:, idx])
            syy = 0.5 * (own[1][:, interior] + nb[1][:, idx])
            sxy = 0.5 * (own[2][:, interior] + nb[2][:, idx])
            tx[:, interior] = sxx * nx + sxy * ny
            ty[:, interior] = sxy * nx + syy * ny
            Rx += (tx * ew) @ self.edge_vals[s]
            Ry += (ty * ew) @ self.edge_vals[s]
        return np.concatenate([Rx, Ry], axis=-1) * self.free

    def solve(self, R):
        """Local solutions and squared a0-bar norms summed per block."""
        E = np.einsum("eij,bej->bei", self.Kinv[self.pattern_id], R)
        return E, np.sum(R * E, axis=(1, 2))
