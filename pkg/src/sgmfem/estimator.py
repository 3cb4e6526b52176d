"""Hierarchical a posteriori error estimation for the SG mixed system.

Residual right-hand sides are contractions of the deterministic matrices
with the solution blocks; no solution values are re-evaluated by
quadrature except in :func:`eta2_direct`.  Inner products:

    a0-bar = alpha int grad:grad,   c-bar = (1/alpha + c) int p q,
    d0-bar = c int e_0 p q,          c = (alpha beta)^-1.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .chaos import IndexSet, coupling_matrix, detail_index_set
from .femkit.localization import ElementResidualProblem
from .femkit.quadrature import gauss_square

LOCALIZATIONS = ("global", "element")


def _e0(blocks):
    return float(blocks.coeff.evaluate(0, np.zeros(2)))


def _rows(mat, X):
    """Apply ``mat`` to every chaos block (rows of X)."""
    return (mat @ X.T).T


class _Factor:
    def __init__(self, mat):
        self.lu = spla.splu(sp.csc_matrix(mat))

    def solve(self, R):
        if R.shape[0] == 0:
            return np.zeros_like(R)
        return self.lu.solve(np.ascontiguousarray(R.T)).T


class ResidualAssembler:
    """Residual functionals of a solution tested against detail or coarse bases.

    Factorizations of the detail and coarse Gram matrices are built lazily
    and cached, so one assembler serves every index of Lambda and Q.
    """

    def __init__(self, blocks, detail, sol):
        self.blocks = blocks
        self.detail = detail
        self.sol = sol
        self.lam = sol.lam
        self.c = blocks.c
        self.e0 = _e0(blocks)
        self._cache = {}

    def _factor(self, key, mat):
        if key not in self._cache:
            self._cache[key] = _Factor(mat)
        return self._cache[key]

    def _terms(self, rows):
        b = self.blocks
        b.ensure_terms(b.n_terms)
        out = []
        for k in range(0, min(b.n_terms, max(self.lam.n_active, rows.n_active)) + 1):
            if b.coeff.is_zero(k):
                continue
            G = coupling_matrix(k, rows, self.lam)
            if G.nnz:
                out.append((k, G))
        return out

    # spatial (detail-space) residuals, one row per alpha in Lambda
    def detail_residuals(self):
        b, d, s, c = self.blocks, self.detail, self.sol, self.c
        d.ensure_terms(b.n_terms)
        nl = len(self.lam)
        Ru = -_rows(d.B_cd.T, s.p)
        Rp = -_rows(d.B_dc, s.u) + c * _rows(d.M_dc, s.pt)
        Rpt = c * _rows(d.M_dc, s.p)
        for k, G in self._terms(self.lam):
            Ru -= G @ _rows(d.A_dc[k], s.u)
            Rpt -= c * (G @ _rows(d.Mk_dc[k], s.pt))
        i0 = self.lam.position(())
        Ru[i0] += d.f_d
        assert Ru.shape[0] == nl
        return Ru, Rp, Rpt

    # parametric residuals on the coarse spaces, one row per alpha in Q
    def parametric_residuals(self, Q):
        b, s, c = self.blocks, self.sol, self.c
        Ru = np.zeros((len(Q), b.A[0].shape[0]))
        Rpt = np.zeros((len(Q), b.M.shape[0]))
        for k, G in self._terms(Q):
            Ru -= G @ _rows(b.A[k], s.u)
            Rpt -= c * (G @ _rows(b.Mk[k], s.pt))
        return Ru, Rpt

    def element_residuals(self):
        """Local displacement residuals and their cell-wise representers."""
        if "element" not in self._cache:
            self._cache["element"] = ElementResidualProblem(self.blocks, self.detail.option)
        prob = self._cache["element"]
        terms = [(k, G @ self.sol.u) for k, G in self._terms(self.lam)]
        R = prob.residuals({"p": self.sol.p, "terms": terms}, self.lam.position(()))
        E, _ = prob.solve(R)
        return R, E

    def coarse_residuals(self):
        """Residual functionals on the coarse basis (zero for an exact Galerkin solution)."""
        b, s, c = self.blocks, self.sol, self.c
        Ru = -_rows(b.B.T, s.p)
        Rp = -_rows(b.B, s.u) + c * _rows(b.M, s.pt)
        Rpt = c * _rows(b.M, s.p)
        for k, G in self._terms(self.lam):
            Ru -= G @ _rows(b.A[k], s.u)
            Rpt -= c * (G @ _rows(b.Mk[k], s.pt))
        Ru[self.lam.position(())] += b.f
        return Ru, Rp, Rpt


@dataclass
class SpatialEstimate:
    eu: np.ndarray
    ep: np.ndarray
    ept: np.ndarray
    norm_u: float
    norm_p: float
    norm_pt: float


@dataclass
class ParametricEstimate:
    indices: IndexSet
    eu: np.ndarray
    ept: np.ndarray
    norms_u: np.ndarray
    norms_pt: np.ndarray

    @property
    def eta_alpha(self):
        return np.sqrt(self.norms_u ** 2 + self.norms_pt ** 2)


@dataclass
class EstimateReport:
    """Total estimate, its three contributions and the error reduction proxies."""

    eta: float
    eta1: float
    eta2: float
    eta3: float
    spatial_u: float
    spatial_p: float
    spatial_pt: float
    param_u: dict = field(default_factory=dict)
    param_pt: dict = field(default_factory=dict)
    eta_alpha: dict = field(default_factory=dict)
    eta_spatial_proxy: float = 0.0
    eta_param_proxy: float = 0.0
    delta_h: float = 0.0

    @property
    def eta_step(self):
        """``(delta_h^2 + eta_Q^2)^(1/2)``, the quantity tested against the tolerance."""
        return float(np.hypot(self.delta_h, self.eta_param_proxy))

    def as_dict(self):
        out = {k: getattr(self, k) for k in (
            "eta", "eta1", "eta2", "eta3", "spatial_u", "spatial_p", "spatial_pt",
            "eta_spatial_proxy", "eta_param_proxy", "delta_h")}
        out["eta_alpha"] = {str(a): v for a, v in self.eta_alpha.items()}
        return out


def eta2_direct(sol, blocks, quad=3):
    """``(1/alpha + c)^(-1/2) || div u + c p~ ||`` summed over chaos blocks."""
    spaces = blocks.spaces
    pts, wts = gauss_square(quad)
    det = 0.25 * spaces.mesh.h ** 2
    U = spaces.expand(sol.u)
    N = spaces.disp.ndofs
    _, gx = spaces.disp.evaluate(U[:, :N], pts)
    _, gy = spaces.disp.evaluate(U[:, N:], pts)
    pt, _ = spaces.pres.evaluate(sol.pt, pts)
    r = gx[..., 0] + gy[..., 1] + blocks.c * pt
    total = float(np.sum((r ** 2) * wts) * det)
    return float(np.sqrt(total / (1.0 / blocks.alpha + blocks.c)))


def solve_spatial_estimators(assembler, localization="global"):
    """Detail-space Riesz representers of the three residuals for every alpha in Lambda.

    ``localization="global"`` solves the displacement problem on the whole
    detail space; ``"element"`` solves independent cell problems with
    averaged boundary tractions (see :mod:`sgmfem.femkit.localization`).
    The pressure detail problems are solved globally in both cases.
    """
    d, b, c = assembler.detail, assembler.blocks, assembler.c
    if localization not in LOCALIZATIONS:
        raise ValueError(f"localization must be one of {LOCALIZATIONS}")
    Ru, Rp, Rpt = assembler.detail_residuals()
    fm = assembler._factor("M_dd", d.M_dd)
    if localization == "global":
        fa = assembler._factor("Abar_dd", d.Abar_dd)
        eu = fa.solve(Ru)
    else:
        Ru, eu = assembler.element_residuals()
    cbar = 1.0 / b.alpha + c
    ep = fm.solve(Rp) / cbar
    ept = fm.solve(Rpt) / (c * assembler.e0)
    nu = float(np.sqrt(max(np.sum(Ru * eu), 0.0)))
    np_ = float(np.sqrt(max(np.sum(Rp * ep), 0.0)))
    npt = float(np.sqrt(max(np.sum(Rpt * ept), 0.0)))
    return SpatialEstimate(eu, ep, ept, nu, np_, npt)


def solve_parametric_estimators(assembler, Q):
    """Coarse-space representers for each alpha in ``Q`` (disjoint from Lambda)."""
    b, c = assembler.blocks, assembler.c
    for a in Q:
        if a in assembler.lam:
            raise ValueError(f"index {a} belongs to the solution index set")
    Ru, Rpt = assembler.parametric_residuals(Q)
    fa = assembler._factor("Abar", b.Abar)
    fm = assembler._factor("M", b.M)
    eu = fa.solve(Ru)
    ept = fm.solve(Rpt) / (c * assembler.e0)
    nu = np.sqrt(np.maximum(np.sum(Ru * eu, axis=1), 0.0))
    npt = np.sqrt(np.maximum(np.sum(Rpt * ept, axis=1), 0.0))
    return ParametricEstimate(Q, eu, ept, nu, npt)


def aggregate(spatial, parametric, eta2):
    """Combine the parts into :class:`EstimateReport`."""
    su, sp_, spt = spatial.norm_u, spatial.norm_p, spatial.norm_pt
    pu2 = float(np.sum(parametric.norms_u ** 2))
    ppt2 = float(np.sum(parametric.norms_pt ** 2))
    eta1 = np.sqrt(su ** 2 + pu2)
    eta3 = np.sqrt(spt ** 2 + ppt2)
    eta = np.sqrt(eta1 ** 2 + eta2 ** 2 + eta3 ** 2)
    ea = parametric.eta_alpha
    keys = list(parametric.indices)
    return EstimateReport(
        eta=float(eta),
        eta1=float(eta1),
        eta2=float(eta2),
        eta3=float(eta3),
        spatial_u=su,
        spatial_p=sp_,
        spatial_pt=spt,
        param_u=dict(zip(keys, map(float, parametric.norms_u))),
        param_pt=dict(zip(keys, map(float, parametric.norms_pt))),
        eta_alpha=dict(zip(keys, map(float, ea))),
        eta_spatial_proxy=float(np.sqrt(su ** 2 + sp_ ** 2 + spt ** 2)),
        eta_param_proxy=float(np.sqrt(np.sum(ea ** 2))),
        delta_h=float(np.sqrt(su ** 2 + eta2 ** 2 + spt ** 2)),
    )


def estimate(blocks, detail, sol, Q=None, assembler=None, localization="global"):
    """Full estimate for ``sol``; ``Q`` defaults to the detail index set of its Lambda."""
    Q = detail_index_set(sol.lam) if Q is None else Q
    assembler = assembler or ResidualAssembler(blocks, detail, sol)
    spatial = solve_spatial_estimators(assembler, localization)
    param = solve_parametric_estimators(assembler, Q)
    return aggregate(spatial, param, eta2_direct(sol, blocks))
