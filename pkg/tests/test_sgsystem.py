import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from sgmfem.chaos import IndexSet
from sgmfem.errors import ConfigurationError, NonConvergenceError
from sgmfem.femkit.coefficients import affine_scalar
from sgmfem.sgsystem import BlockPreconditioner, SGOperator, build_operator, minres, solve_minres

from conftest import make_blocks


def three_field_matrix(b, k=0):
    """Deterministic three-field matrix for E = e_k (oracle for |Lambda| = 1)."""
    c = b.c
    return sp.bmat([
        [b.A[k], b.B.T, None],
        [b.B, None, -c * b.M],
        [None, -c * b.M, c * b.Mk[k]],
    ]).toarray()


def test_single_index_is_deterministic_system():
    b = make_blocks(level=1)
    op = SGOperator(b, IndexSet.zero())
    np.testing.assert_allclose(op.assemble_dense(), three_field_matrix(b), atol=1e-14)


def test_deterministic_coefficient_decouples(rng):
    b = make_blocks(level=1, coeff=affine_scalar(1.0, 0.0))
    op = SGOperator(b, IndexSet.total_degree_1d(1))
    x = np.zeros(op.shape[0])
    U, P, Pt = op.split(x)
    U[0] = rng.standard_normal(U.shape[1])
    P[0] = rng.standard_normal(P.shape[1])
    Pt[0] = rng.standard_normal(Pt.shape[1])
    yU, yP, yPt = op.split(op.apply(x))
    assert np.all(yU[1] == 0) and np.all(yP[1] == 0) and np.all(yPt[1] == 0)


@pytest.mark.parametrize("lam", [IndexSet.total_degree_1d(1), IndexSet.total_degree_1d(2)])
def test_matrix_free_matches_dense(lam, rng):
    b = make_blocks(level=1)
    op = build_operator(b, lam)
    K = op.assemble_dense()
    for _ in range(50):
        x = rng.standard_normal(op.shape[0])
        y = op @ x
        assert np.linalg.norm(y - K @ x) <= 1e-13 * np.linalg.norm(K @ x)


def test_operator_symmetric(rng):
    b = make_blocks(level=2)
    op = build_operator(b, IndexSet.total_degree_1d(3))
    x, z = rng.standard_normal((2, op.shape[0]))
    lhs, rhs = (op @ x) @ z, x @ (op @ z)
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_diagonal_blocks_positive_definite():
    b = make_blocks(level=1)
    op = build_operator(b, IndexSet.total_degree_1d(2))
    K = op.assemble_dense()
    nl, nu, npr = op.nl, op.n_u, op.n_p
    A = K[:nl * nu, :nl * nu]
    D = K[nl * (nu + npr):, nl * (nu + npr):]
    assert np.linalg.eigvalsh(A).min() > 0
    assert np.linalg.eigvalsh(D).min() > 0


def test_minres_deterministic_solve():
    b = make_blocks(level=2)
    op = build_operator(b, IndexSet.zero())
    sol, report = solve_minres(op, tol=1e-10)
    rhs = op.rhs()
    res = np.linalg.norm(op @ sol.as_vector() - rhs) / np.linalg.norm(rhs)
    assert res <= 1e-9
    assert report.residual <= 1e-10


def test_minres_zero_rhs():
    b = make_blocks(level=1)
    op = build_operator(b, IndexSet.total_degree_1d(1))
    sol, report = solve_minres(op, rhs=np.zeros(op.shape[0]))
    assert report.iterations == 0
    assert not np.any(sol.as_vector())


def test_minres_agrees_with_scipy(rng):
    b = make_blocks(level=2)
    op = build_operator(b, IndexSet.total_degree_1d(2))
    pc = BlockPreconditioner(op)
    x, _ = minres(op.apply, op.rhs(), pc.apply, tol=1e-12, maxit=2000)
    M = spla.LinearOperator(op.shape, matvec=pc.apply, dtype=float)
    kw = {"rtol": 1e-12} if "rtol" in spla.minres.__code__.co_varnames else {"tol": 1e-12}
    xs, info = spla.minres(op.as_linear_operator(), op.rhs(), M=M, maxiter=2000, **kw)
    assert info == 0
    assert np.linalg.norm(x - xs) <= 1e-8 * np.linalg.norm(xs)


def test_minres_small_dense_system(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((30, 30)))
    A = Q @ np.diag(np.r_[np.linspace(1, 3, 20), -np.linspace(0.5, 2, 10)]) @ Q.T
    b = rng.standard_normal(30)
    x, hist = minres(lambda v: A @ v, b, tol=1e-13, maxit=200)
    np.testing.assert_allclose(A @ x, b, atol=1e-10)
    assert all(h2 <= h1 + 1e-15 for h1, h2 in zip(hist, hist[1:]))


def test_minres_failures(rng):
    A = np.diag(np.linspace(1, 1e6, 200))
    b = rng.standard_normal(200)
    with pytest.raises(NonConvergenceError) as err:
        minres(lambda v: A @ v, b, tol=1e-14, maxit=3)
    assert len(err.value.history) == 3
    with pytest.raises(ConfigurationError):
        minres(lambda v: A @ v, b, lambda v: -v)


def test_iterations_bounded_in_lambda():
    b = make_blocks(level=2, coeff=affine_scalar(1.0, 0.1))
    its = []
    for k in (1, 9):
        op = build_operator(b, IndexSet.total_degree_1d(k))
        _, report = solve_minres(op, tol=1e-8)
        its.append(report.iterations)
    assert its[1] <= 2 * its[0]
