"""Kronecker-structured stochastic Galerkin saddle-point system and its solver.

Unknowns are stored field by field, each field as a (|Lambda|, n) array of
chaos blocks: ``x = [U.ravel(), P.ravel(), Pt.ravel()]``.  The operator is

    [ sum_k G_k x A_k      I x B^T         0                  ]
    [ I x B                0              -c I x M            ]
    [ 0                   -c I x M         c sum_k G_k x M_k  ]

with ``c = (alpha beta)^-1``, applied without forming the Kronecker products.
"""
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .chaos import coupling_matrix
from .errors import ConfigurationError, NonConvergenceError


@dataclass(eq=False)
class SGSolution:
    """Chaos coefficient blocks of the three fields, one row per index of ``lam``."""

    lam: object
    u: np.ndarray
    p: np.ndarray
    pt: np.ndarray

    def as_vector(self):
        return np.concatenate([self.u.ravel(), self.p.ravel(), self.pt.ravel()])


@dataclass
class SolverReport:
    iterations: int
    residual: float
    seconds: float
    history: list = field(default_factory=list, repr=False)

    def as_dict(self):
        return {"iterations": self.iterations, "residual": self.residual, "seconds": self.seconds}


class SGOperator:
    """Matrix-free SG operator for ``blocks`` on the index set ``lam``."""

    def __init__(self, blocks, lam):
        self.blocks = blocks
        self.lam = lam
        self.nl = len(lam)
        self.n_u = blocks.B.shape[1]
        self.n_p = blocks.B.shape[0]
        self.c = blocks.c
        # terms beyond the truncation or with a vanishing coupling contribute nothing
        self.terms = []
        for k in range(0, min(blocks.n_terms, lam.n_active) + 1):
            G = coupling_matrix(k, lam)
            if G.nnz and not blocks.coeff.is_zero(k):
                self.terms.append((k, G))

    @property
    def shape(self):
        n = self.nl * (self.n_u + 2 * self.n_p)
        return (n, n)

    def split(self, x):
        nl, nu, np_ = self.nl, self.n_u, self.n_p
        U = x[: nl * nu].reshape(nl, nu)
        P = x[nl * nu: nl * (nu + np_)].reshape(nl, np_)
        Pt = x[nl * (nu + np_):].reshape(nl, np_)
        return U, P, Pt

    def apply(self, x):
        b, c = self.blocks, self.c
        U, P, Pt = self.split(np.asarray(x, dtype=float))
        yU = (b.B.T @ P.T).T
        yPt = -c * (b.M @ P.T).T
        for k, G in self.terms:
            yU += G @ (b.A[k] @ U.T).T
            yPt += c * (G @ (b.Mk[k] @ Pt.T).T)
        yP = (b.B @ U.T).T - c * (b.M @ Pt.T).T
        return np.concatenate([yU.ravel(), yP.ravel(), yPt.ravel()])

    __matmul__ = apply

    def as_linear_operator(self):
        return spla.LinearOperator(self.shape, matvec=self.apply, dtype=float)

    def assemble_dense(self):
        """Explicit matrix (small problems and tests only)."""
        b, c = self.blocks, self.c
        I = sp.identity(self.nl)
        A = sum(sp.kron(G, b.A[k]) for k, G in self.terms)
        D = c * sum(sp.kron(G, b.Mk[k]) for k, G in self.terms)
        K = sp.bmat(
            [
                [A, sp.kron(I, b.B.T), None],
                [sp.kron(I, b.B), None, -c * sp.kron(I, b.M)],
                [None, -c * sp.kron(I, b.M), D],
            ]
        )
        return K.toarray()

    def rhs(self):
        """Load on the mean displacement block only."""
        out = np.zeros(self.shape[0])
        i0 = self.lam.position(())
        out[i0 * self.n_u:(i0 + 1) * self.n_u] = self.blocks.f
        return out


class BlockPreconditioner:
    """``diag(I x A_0, I x (1/alpha + c) M, I x c M_0)`` applied through sparse LU."""

    def __init__(self, op):
        b = op.blocks
        self.op = op
        self.lu_a = spla.splu(sp.csc_matrix(b.A[0]))
        self.lu_m = spla.splu(sp.csc_matrix(b.M))
        self.lu_m0 = spla.splu(sp.csc_matrix(b.Mk[0]))
        self.sp_ = 1.0 / b.alpha + b.c
        self.st = b.c

    def apply(self, r):
        U, P, Pt = self.op.split(r)
        zU = self.lu_a.solve(np.ascontiguousarray(U.T)).T
        zP = self.lu_m.solve(np.ascontiguousarray(P.T)).T / self.sp_
        zPt = self.lu_m0.solve(np.ascontiguousarray(Pt.T)).T / self.st
        return np.concatenate([zU.ravel(), zP.ravel(), zPt.ravel()])


def minres(apply_a, b, apply_m=None, tol=1e-8, maxit=1000):
    """Preconditioned MINRES (Paige-Saunders recurrences).

    Stops when the preconditioned residual norm, relative to its initial
    value, drops below ``tol``.  Returns ``(x, history)``; raises
    :class:`NonConvergenceError` after ``maxit`` iterations and
    :class:`ConfigurationError` if the preconditioner is not positive definite.
    """
    apply_m = apply_m or (lambda v: v)
    n = b.size
    x = np.zeros(n)
    r1 = b.copy()
    y = apply_m(r1)
    beta1 = float(r1 @ y)
    if beta1 < 0:
        raise ConfigurationError("preconditioner is not positive definite")
    history = []
    if beta1 == 0:
        return x, history
    beta1 = np.sqrt(beta1)
    oldb, beta = 0.0, beta1
    dbar = epsln = 0.0
    phibar = beta1
    cs, sn = -1.0, 0.0
    w = np.zeros(n)
    w2 = np.zeros(n)
    r2 = r1
    eps = np.finfo(float).eps
    for itn in range(1, maxit + 1):
        v = y / beta
        y = apply_a(v)
        if itn >= 2:
            y = y - (beta / oldb) * r1
        alfa = float(v @ y)
        y = y - (alfa / beta) * r2
        r1, r2 = r2, y
        y = apply_m(r2)
        oldb = beta
        beta = float(r2 @ y)
        if beta < 0:
            raise ConfigurationError("preconditioner is not positive definite")
        beta = np.sqrt(beta)
        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(np.hypot(gbar, beta), eps)
        cs, sn = gbar / gamma, beta / gamma
        phi = cs * phibar
        phibar = sn * phibar
        w1, w2 = w2, w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w
        history.append(phibar / beta1)
        if history[-1] <= tol or beta == 0:
            return x, history
    raise NonConvergenceError(f"MINRES did not reach {tol:g} in {maxit} iterations", history)


def build_operator(blocks, lam):
    if blocks.coeff.kind == "cosine-expansion":
        blocks.ensure_terms(lam.n_active)
    return SGOperator(blocks, lam)


def solve_minres(op, rhs=None, tol=1e-8, maxit=1000, precond=None):
    """Solve ``K x = rhs`` with block-diagonal preconditioned MINRES."""
    t0 = time.perf_counter()
    rhs = op.rhs() if rhs is None else np.asarray(rhs, dtype=float)
    precond = precond or BlockPreconditioner(op)
    x, hist = minres(op.apply, rhs, precond.apply, tol, maxit)
    U, P, Pt = op.split(x)
    report = SolverReport(len(hist), hist[-1] if hist else 0.0, time.perf_counter() - t0, hist)
    return SGSolution(op.lam, U.copy(), P.copy(), Pt.copy()), report
