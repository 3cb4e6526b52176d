"""Assembly of the deterministic matrices of the three-field formulation.

With Young's modulus ``E = sum_k e_k y_k`` (``y_0 = 1``) the forms split
into per-term matrices

    A_k  = alpha * int e_k eps(phi_i) : eps(phi_j)      strain stiffness
    Abar = alpha * int grad(phi_i) : grad(phi_j)        a_0-bar Gram matrix
    B    = -int q_s div(phi_j)                          divergence
    M_k  = int e_k q_s q_t                              weighted pressure mass
    M    = int q_s q_t
    f    = int f . phi_j

with ``alpha = 1/(1+nu)`` and ``beta = nu/(1-2nu)``.  Displacement rows
and columns on Dirichlet edges are dropped (homogeneous data).
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import ParameterError
from .coefficients import check_positivity
from .quadrature import gauss_square, physical_points
from .spaces import pminus1_space, q1_space, q2_space

PRESSURE_SPACES = ("pminus1", "q1")


def lame_constants(nu):
    """Return ``(alpha, beta)`` for Poisson ratio ``nu`` in (0, 1/2)."""
    if not 0.0 < nu < 0.5:
        raise ParameterError(f"Poisson ratio must lie in (0, 1/2), got {nu}")
    return 1.0 / (1.0 + nu), nu / (1.0 - 2.0 * nu)


def _select(vals, grads, which):
    if which == "v":
        return vals
    return grads[..., {"x": 0, "y": 1}[which]]


def assemble_form(test, trial, which_test="v", which_trial="v", coef=None, quad=3):
    """Sparse matrix of ``int c * D_test(phi_i) * D_trial(psi_j)`` over the grid.

    ``which_*`` is one of ``"v"`` (value), ``"x"``, ``"y"`` (partial
    derivatives).  ``coef`` is ``None`` (unit), a scalar, or the coefficient
    at the quadrature points, shape (n_elements, quad**2).
    """
    if test.n != trial.n:
        raise ValueError("test and trial spaces live on different grids")
    pts, wts = gauss_square(quad)
    det = 0.25 * test.h ** 2
    tv, tg = test.tabulate(pts)
    rv, rg = trial.tabulate(pts)
    phi = _select(tv, tg, which_test)
    psi = _select(rv, rg, which_trial)
    local = np.einsum("q,qi,qj->qij", wts * det, phi, psi).reshape(len(wts), -1)
    nel = test.cell_dofs.shape[0]
    if coef is None or np.isscalar(coef):
        scale = 1.0 if coef is None else float(coef)
        data = np.broadcast_to(scale * local.sum(axis=0), (nel, local.shape[1]))
    else:
        data = np.asarray(coef) @ local
    ni, nj = phi.shape[1], psi.shape[1]
    rows = np.broadcast_to(test.cell_dofs[:, :, None], (nel, ni, nj))
    cols = np.broadcast_to(trial.cell_dofs[:, None, :], (nel, ni, nj))
    mat = sp.coo_matrix(
        (data.ravel(), (rows.ravel(), cols.ravel())), shape=(test.ndofs, trial.ndofs)
    )
    return mat.tocsr()


def assemble_load(space, mesh, func, quad=3):
    """Vector ``int f . phi`` for the vector space (space)^2; ``func`` maps (...,2) -> (...,2)."""
    pts, wts = gauss_square(quad)
    vals, _ = space.tabulate(pts)
    fx = np.asarray(func(physical_points(mesh, pts)))
    det = 0.25 * space.h ** 2
    out = np.zeros(2 * space.ndofs)
    for c in range(2):
        local = (fx[..., c] * (wts * det)) @ vals
        out[c * space.ndofs:(c + 1) * space.ndofs] = np.bincount(
            space.cell_dofs.ravel(), weights=local.ravel(), minlength=space.ndofs
        )
    return out


def strain_form(test, trial, coef=None, quad=3):
    """Vector matrix of ``int c eps(v):eps(u)``, x-components first."""
    K = {
        (a, b): assemble_form(test, trial, a, b, coef, quad)
        for a in "xy"
        for b in "xy"
    }
    return sp.bmat(
        [
            [K["x", "x"] + 0.5 * K["y", "y"], 0.5 * K["y", "x"]],
            [0.5 * K["x", "y"], K["y", "y"] + 0.5 * K["x", "x"]],
        ],
        format="csr",
    )


def gradient_form(test, trial, coef=None, quad=3):
    """Vector matrix of ``int c grad(v):grad(u)``."""
    K = assemble_form(test, trial, "x", "x", coef, quad) + assemble_form(test, trial, "y", "y", coef, quad)
    return sp.block_diag([K, K], format="csr")


def divergence_form(ptest, utrial, quad=3):
    """Matrix of ``-int q div(u)`` (pressure rows, vector displacement columns)."""
    return -sp.hstack(
        [assemble_form(ptest, utrial, "v", "x", None, quad), assemble_form(ptest, utrial, "v", "y", None, quad)],
        format="csr",
    )


def coefficient_at_quadrature(coeff, m, mesh, quad=3):
    """Scalar for spatially constant terms, else values of shape (n_elements, quad**2)."""
    if coeff.is_constant(m):
        return float(coeff.evaluate(m, np.zeros(2)))
    pts, _ = gauss_square(quad)
    return coeff.evaluate(m, physical_points(mesh, pts))


def _scaled(mat, c):
    return c * mat if np.isscalar(c) else mat


class FeSpacePair:
    """Q2 displacement with P-1 (default) or Q1 pressure on a mesh.

    Displacement vectors are indexed ``comp * N + node`` over all nodes;
    ``free`` lists the indices that survive Dirichlet elimination.
    """

    def __init__(self, mesh, pressure="pminus1"):
        if pressure not in PRESSURE_SPACES:
            raise ValueError(f"pressure space must be one of {PRESSURE_SPACES}")
        self.mesh = mesh
        self.pressure = pressure
        self.disp = q2_space(mesh.n)
        self.pres = pminus1_space(mesh.n) if pressure == "pminus1" else q1_space(mesh.n)
        fixed = self.disp.dofs_on_sides(sorted(mesh.bc.dirichlet_edges))
        N = self.disp.ndofs
        mask = np.ones(2 * N, dtype=bool)
        mask[fixed] = False
        mask[N + fixed] = False
        self.free = np.flatnonzero(mask)
        self.dirichlet_nodes = fixed

    @property
    def n_u(self):
        return self.free.size

    @property
    def n_p(self):
        return self.pres.ndofs

    @property
    def n_spatial(self):
        """Spatial unknowns of the three-field system."""
        return self.n_u + 2 * self.n_p

    def expand(self, u_free):
        """Full nodal displacement vector(s) from free coefficients (leading axes kept)."""
        u_free = np.asarray(u_free)
        full = np.zeros(u_free.shape[:-1] + (2 * self.disp.ndofs,))
        full[..., self.free] = u_free
        return full

    def restrict(self, mat, rows=True, cols=True):
        mat = sp.csr_matrix(mat)
        if rows:
            mat = mat[self.free]
        if cols:
            mat = mat[:, self.free]
        return mat.tocsr()


@dataclass(eq=False)
class DeterministicBlocks:
    """Per-term FE matrices; term lists grow on demand via :meth:`ensure_terms`."""

    spaces: FeSpacePair
    coeff: object
    nu: float
    alpha: float
    beta: float
    Abar: sp.csr_matrix
    B: sp.csr_matrix
    M: sp.csr_matrix
    f: np.ndarray
    quad: int = 3
    load_func: object = None
    A: list = field(default_factory=list)
    Mk: list = field(default_factory=list)

    @property
    def c(self):
        """Weight ``(alpha*beta)^-1`` of the c and d forms."""
        return 1.0 / (self.alpha * self.beta)

    @property
    def n_terms(self):
        return len(self.A) - 1

    def ensure_terms(self, M):
        """Assemble A_k, M_k up to k = M, extending the coefficient if needed."""
        if M > self.coeff.truncation:
            self.coeff = self.coeff.with_truncation(M)
            check_positivity(self.coeff)
        sp_ = self.spaces
        for k in range(len(self.A), M + 1):
            coef = coefficient_at_quadrature(self.coeff, k, sp_.mesh, self.quad)
            S = strain_form(sp_.disp, sp_.disp, None if np.isscalar(coef) else coef, self.quad)
            self.A.append(sp_.restrict(self.alpha * _scaled(S, coef)))
            Mk = assemble_form(sp_.pres, sp_.pres, "v", "v", None if np.isscalar(coef) else coef, self.quad)
            self.Mk.append(_scaled(Mk, coef).tocsr())
        return self


def assemble_blocks(spaces, coeff, nu, f, quad=3):
    """Assemble every deterministic block for Poisson ratio ``nu``.

    ``f`` maps points of shape (..., 2) to body-force values (..., 2).
    """
    alpha, beta = lame_constants(nu)
    check_positivity(coeff)
    Abar = spaces.restrict(alpha * gradient_form(spaces.disp, spaces.disp, None, quad))
    B = spaces.restrict(divergence_form(spaces.pres, spaces.disp, quad), rows=False)
    M = assemble_form(spaces.pres, spaces.pres, "v", "v", None, quad)
    load = assemble_load(spaces.disp, spaces.mesh, f, quad)[spaces.free]
    blocks = DeterministicBlocks(spaces, coeff, nu, alpha, beta, Abar, B, M, load, quad, f)
    return blocks.ensure_terms(coeff.truncation)
