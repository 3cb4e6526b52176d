"""Finite element detail spaces and their coupling to the coarse spaces.

Option I uses functions of the same order on the once-refined mesh: Q2
nodal functions at refined nodes that are not coarse nodes, and for P-1
pressures the L2-orthogonal complement of coarse P-1 inside refined P-1
(9 functions per coarse cell).  Option II keeps the mesh and adds higher
order hierarchical modes: degree-3 edge/interior modes for Q2 and local
quadratics orthogonal to P1 for P-1.

All matrices are stored with detail rows and coarse columns, restricted
to free (non-Dirichlet) displacement dofs on both sides.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ..errors import DetailSpaceError
from ..mesh import BcConfig, build_unit_square, refine_uniform
from .assembly import (
    FeSpacePair,
    assemble_blocks,
    assemble_form,
    assemble_load,
    coefficient_at_quadrature,
    divergence_form,
    gradient_form,
    strain_form,
)
from .spaces import p2_complement_space, q2_hierarchical_detail_space, q3_hierarchical_detail_space

OPTIONS = ("I", "II")


def nodal_prolongation(coarse, fine):
    """Matrix interpolating a coarse Q1/Q2 field at the nodes of the refined grid."""
    per = {"Q1": 1, "Q2": 2}[coarse.name]
    if fine.name != coarse.name or fine.n != 2 * coarse.n:
        raise ValueError("fine space must be the same family on the refined grid")
    k = 2 * per  # fine node intervals per coarse cell side
    t = np.linspace(-1.0, 1.0, k + 1)
    X, Y = np.meshgrid(t, t)
    vals, _ = coarse.tabulate(np.column_stack([X.ravel(), Y.ravel()]))
    mf = per * fine.n
    n = coarse.n
    ex, ey = np.meshgrid(np.arange(n), np.arange(n))
    ex, ey = ex.ravel(), ey.ravel()
    a, b = np.meshgrid(np.arange(k + 1), np.arange(k + 1))
    fine_nodes = (k * ey[:, None] + b.ravel()[None, :]) * (mf + 1) + k * ex[:, None] + a.ravel()[None, :]
    rows = np.broadcast_to(fine_nodes[:, :, None], fine_nodes.shape + (coarse.nloc,))
    cols = np.broadcast_to(coarse.cell_dofs[:, None, :], rows.shape)
    data = np.broadcast_to(vals[None, :, :], rows.shape)
    rows, cols, data = rows.ravel(), cols.ravel(), data.ravel()
    keep = np.abs(data) > 1e-14
    rows, cols, data = rows[keep], cols[keep], data[keep]
    # shared nodes appear once per neighbouring cell with identical values
    _, first = np.unique(rows * coarse.ndofs + cols, return_index=True)
    return sp.csr_matrix((data[first], (rows[first], cols[first])), shape=(fine.ndofs, coarse.ndofs))


def _pminus1_local_transfer(h):
    """Coarse P-1 in the refined P-1 basis on one cell and its L2 complement.

    Children ordered (0,0), (1,0), (0,1), (1,1); returns T (12x3), Z (12x9)
    with Z^T G Z = I, T^T G Z = 0 for the refined local mass G.
    """
    hf = 0.5 * h
    T = np.zeros((12, 3))
    G = np.zeros((12, 12))
    gc = np.diag([hf ** 2, hf ** 4 / 12.0, hf ** 4 / 12.0])
    for c, (i, j) in enumerate([(0, 0), (1, 0), (0, 1), (1, 1)]):
        dx, dy = (i - 0.5) * hf, (j - 0.5) * hf
        s = slice(3 * c, 3 * c + 3)
        T[s, :] = [[1.0, dx, dy], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        G[s, s] = gc
    Z = sla.null_space(T.T @ G)
    L = np.linalg.cholesky(Z.T @ G @ Z)
    Z = Z @ np.linalg.inv(L).T
    return T, Z


def _pminus1_transfer(n):
    """Global (fine x coarse) embedding and (fine x detail) complement for P-1."""
    T, Z = _pminus1_local_transfer(1.0 / n)
    ex, ey = np.meshgrid(np.arange(n), np.arange(n))
    ec = (ey * n + ex).ravel()
    nf = 2 * n
    child_cells = np.stack(
        [(2 * ey + j) * nf + 2 * ex + i for (i, j) in [(0, 0), (1, 0), (0, 1), (1, 1)]], axis=-1
    ).reshape(n * n, 4)
    fine_dofs = (3 * child_cells[:, :, None] + np.arange(3)[None, None, :]).reshape(n * n, 12)

    def glob(local, width):
        rows = np.broadcast_to(fine_dofs[:, :, None], (n * n, 12, width))
        cols = np.broadcast_to((width * ec)[:, None, None] + np.arange(width)[None, None, :], rows.shape)
        data = np.broadcast_to(local[None], rows.shape)
        return sp.csr_matrix(
            (data.ravel(), (rows.ravel(), cols.ravel())), shape=(3 * nf * nf, width * n * n)
        )

    return glob(T, 3), glob(Z, 9)


def _vector_selection(ndofs_scalar, scalar_ids, free):
    """Map positions of ``free`` (vector numbering) onto the vector ids built from ``scalar_ids``."""
    vec = np.concatenate([scalar_ids, ndofs_scalar + scalar_ids])
    pos = np.full(2 * ndofs_scalar, -1)
    pos[free] = np.arange(free.size)
    sel = pos[vec]
    return sel[sel >= 0]


@dataclass(eq=False)
class DetailSpace:
    """Detail bases and the detail/coarse matrices needed for residual solves.

    Attributes (``d`` = detail, ``c`` = coarse, free dofs only):

    ``Abar_dd``  a0-bar Gram matrix on the displacement detail space
    ``Abar_dc``  a0-bar coupling (detail x coarse)
    ``A_dc[k]``  strain stiffness coupling per expansion term
    ``B_cd``     ``-int q_c div v_d``  (coarse pressure x detail displacement)
    ``B_dc``     ``-int q_d div u_c``  (detail pressure x coarse displacement)
    ``M_dd``     pressure detail mass; ``M_dc`` plain and ``Mk_dc[k]`` weighted couplings
    ``f_d``      load on the displacement detail space
    """

    option: str
    spaces: FeSpacePair
    blocks: object
    Abar_dd: sp.csr_matrix
    Abar_dc: sp.csr_matrix
    B_cd: sp.csr_matrix
    B_dc: sp.csr_matrix
    M_dd: sp.csr_matrix
    M_dc: sp.csr_matrix
    f_d: np.ndarray
    A_dc: list = field(default_factory=list)
    Mk_dc: list = field(default_factory=list)
    _ctx: dict = field(default_factory=dict, repr=False)

    @property
    def n_ud(self):
        return self.Abar_dd.shape[0]

    @property
    def n_pd(self):
        return self.M_dd.shape[0]

    def ensure_terms(self, M):
        if self.option == "I":
            fine = self._ctx["fine_blocks"].ensure_terms(M)
            S, P, Zp, Tp = self._ctx["S"], self._ctx["P"], self._ctx["Zp"], self._ctx["Tp"]
            for k in range(len(self.A_dc), M + 1):
                self.A_dc.append((S.T @ fine.A[k] @ P).tocsr())
                self.Mk_dc.append((Zp.T @ fine.Mk[k] @ Tp).tocsr())
        else:
            quad = self._ctx["quad"]
            D, Wd = self._ctx["D"], self._ctx["Wd"]
            sp_ = self.spaces
            coeff = self.blocks.ensure_terms(M).coeff
            for k in range(len(self.A_dc), M + 1):
                coef = coefficient_at_quadrature(coeff, k, sp_.mesh, quad)
                arr = None if np.isscalar(coef) else coef
                S = strain_form(D, sp_.disp, arr, quad)
                if np.isscalar(coef):
                    S = coef * S
                A = self.blocks.alpha * S
                self.A_dc.append(A.tocsr()[self._ctx["dfree"]][:, sp_.free].tocsr())
                Mk = assemble_form(Wd, sp_.pres, "v", "v", arr, quad)
                if np.isscalar(coef):
                    Mk = coef * Mk
                self.Mk_dc.append(Mk.tocsr())
        return self

    def combined_gram(self):
        """Gram matrices of coarse+detail bases for the a0-bar and L2 pressure products."""
        b = self.blocks
        A = sp.bmat([[b.Abar, self.Abar_dc.T], [self.Abar_dc, self.Abar_dd]]).toarray()
        M = sp.bmat([[b.M, self.M_dc.T], [self.M_dc, self.M_dd]]).toarray()
        return A, M


def _check_gram(mat, what):
    diag = mat.diagonal()
    if mat.shape[0] and (np.any(diag <= 0) or not np.all(np.isfinite(diag))):
        raise DetailSpaceError(f"{what} detail Gram matrix is singular")


def _build_option_one(blocks):
    spaces = blocks.spaces
    mesh_f = refine_uniform(spaces.mesh)
    fine_spaces = FeSpacePair(mesh_f, spaces.pressure)
    fine = assemble_blocks(fine_spaces, blocks.coeff, blocks.nu, blocks.load_func, blocks.quad)
    Pn = nodal_prolongation(spaces.disp, fine_spaces.disp)
    P = sp.block_diag([Pn, Pn]).tocsr()[fine_spaces.free][:, spaces.free].tocsr()
    mf = 2 * fine_spaces.mesh.n
    I, J = np.meshgrid(np.arange(mf + 1), np.arange(mf + 1))
    detail_nodes = np.flatnonzero(~((I.ravel() % 2 == 0) & (J.ravel() % 2 == 0)))
    sel = _vector_selection(fine_spaces.disp.ndofs, detail_nodes, fine_spaces.free)
    S = sp.identity(fine_spaces.n_u, format="csr")[:, sel]
    if spaces.pressure == "pminus1":
        Tp, Zp = _pminus1_transfer(spaces.mesh.n)
    else:
        Tp = nodal_prolongation(spaces.pres, fine_spaces.pres)
        mq = fine_spaces.mesh.n
        I, J = np.meshgrid(np.arange(mq + 1), np.arange(mq + 1))
        dq = np.flatnonzero(~((I.ravel() % 2 == 0) & (J.ravel() % 2 == 0)))
        Zp = sp.identity(fine_spaces.n_p, format="csr")[:, dq]
    ds = DetailSpace(
        option="I",
        spaces=spaces,
        blocks=blocks,
        Abar_dd=(S.T @ fine.Abar @ S).tocsr(),
        Abar_dc=(S.T @ fine.Abar @ P).tocsr(),
        B_cd=(Tp.T @ fine.B @ S).tocsr(),
        B_dc=(Zp.T @ fine.B @ P).tocsr(),
        M_dd=(Zp.T @ fine.M @ Zp).tocsr(),
        M_dc=(Zp.T @ fine.M @ Tp).tocsr(),
        f_d=S.T @ fine.f,
    )
    ds._ctx.update(fine_blocks=fine, S=S, P=P, Tp=Tp, Zp=Zp)
    return ds


def _build_option_two(blocks, quad=4):
    spaces = blocks.spaces
    n = spaces.mesh.n
    D = q3_hierarchical_detail_space(n)
    Wd = p2_complement_space(n) if spaces.pressure == "pminus1" else q2_hierarchical_detail_space(n)
    fixed = D.dofs_on_sides(sorted(spaces.mesh.bc.dirichlet_edges))
    mask = np.ones(2 * D.ndofs, dtype=bool)
    mask[fixed] = False
    mask[D.ndofs + fixed] = False
    dfree = np.flatnonzero(mask)
    alpha = blocks.alpha

    def rc(mat):
        return sp.csr_matrix(mat)[dfree][:, spaces.free].tocsr()

    Abar_dd = (alpha * gradient_form(D, D, None, quad)).tocsr()[dfree][:, dfree].tocsr()
    Abar_dc = rc(alpha * gradient_form(D, spaces.disp, None, quad))
    B_cd = divergence_form(spaces.pres, D, quad)[:, dfree].tocsr()
    B_dc = divergence_form(Wd, spaces.disp, quad)[:, spaces.free].tocsr()
    M_dd = assemble_form(Wd, Wd, "v", "v", None, quad)
    M_dc = assemble_form(Wd, spaces.pres, "v", "v", None, quad)
    f_d = assemble_load(D, spaces.mesh, blocks.load_func, quad)[dfree]
    ds = DetailSpace("II", spaces, blocks, Abar_dd, Abar_dc, B_cd, B_dc, M_dd, M_dc, f_d)
    ds._ctx.update(D=D, Wd=Wd, dfree=dfree, quad=quad)
    return ds


def build_detail_space(blocks, option="I"):
    """Detail space of the given option for the discretisation behind ``blocks``."""
    if option not in OPTIONS:
        raise ValueError(f"detail option must be one of {OPTIONS}, got {option!r}")
    ds = _build_option_one(blocks) if option == "I" else _build_option_two(blocks)
    _check_gram(ds.Abar_dd, "displacement")
    _check_gram(ds.M_dd, "pressure")
    return ds.ensure_terms(blocks.n_terms)


def cbs_constants(option="I", pressure="pminus1", level=1):
    """Strengthened Cauchy-Schwarz constants (gamma_1, gamma_2) on a small patch.

    gamma_1 uses the gradient inner product between Q2 and its detail
    space (all-Dirichlet 2x2 patch by default), gamma_2 the L2 product
    between the pressure space and its detail space.
    """
    from ..problems import zero_force
    from .coefficients import affine_scalar

    mesh = build_unit_square(level, BcConfig())
    spaces = FeSpacePair(mesh, pressure)
    blocks = assemble_blocks(spaces, affine_scalar(1.0, 0.0), 0.25, zero_force)
    ds = build_detail_space(blocks, option)

    def gamma(Acc, Acd, Add):
        Acc, Acd, Add = (np.asarray(m.toarray()) for m in (Acc, Acd, Add))
        if Acc.size == 0 or Add.size == 0:
            return 0.0
        C = np.linalg.solve(Acc, Acd) @ np.linalg.solve(Add, Acd.T)
        lam = np.max(np.real(np.linalg.eigvals(C)))
        return float(np.sqrt(max(lam, 0.0)))

    g1 = gamma(blocks.Abar, ds.Abar_dc.T, ds.Abar_dd)
    g2 = gamma(blocks.M, ds.M_dc.T, ds.M_dd)
    return g1, g2
