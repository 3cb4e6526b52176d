"""
Legendre chaos and the matrix-free SG operator
==============================================

Multi-indices label tensor Legendre polynomials in the parameters
y_1, y_2, ...  The stochastic Galerkin matrix is a sum of Kronecker
products G_k x A_k, which we apply block by block instead of forming.
"""
import numpy as np

from sgmfem.chaos import IndexSet, coupling_matrix, detail_index_set
from sgmfem.femkit import FeSpacePair, assemble_blocks, cosine_expansion
from sgmfem.mesh import BcConfig, build_unit_square
from sgmfem.problems import tp2
from sgmfem.sgsystem import build_operator, solve_minres

# an index set: mean, first two linear terms, one quadratic
lam = IndexSet(["()", "(1:1)", "(2:1)", "(1:2)"])
print("Lambda:", lam, "active parameters:", lam.n_active)

# y_1 couples indices differing by one in the first slot only
print("G_1 =\n", np.round(coupling_matrix(1, lam).toarray(), 4))

# the neighbours of Lambda probed by the estimator
print("detail indices:", detail_index_set(lam))

###############################################################################
# Assemble the deterministic blocks for the mixed-boundary problem and
# solve the coupled system with block-diagonal preconditioned MINRES.
problem = tp2(0.49, sigma=2.0)
mesh = build_unit_square(3, problem.bc)
blocks = assemble_blocks(FeSpacePair(mesh), problem.coeff, problem.nu, problem.force)
op = build_operator(blocks, lam)
print("unknowns:", op.shape[0], "expansion terms in use:", [k for k, _ in op.terms])

sol, report = solve_minres(op, tol=1e-10)
print(f"MINRES: {report.iterations} iterations, relative residual {report.residual:.1e}")

# the mean displacement carries most of the energy, higher chaos blocks decay
for a, u in zip(lam, sol.u):
    print(f"  |u_{a}| = {np.linalg.norm(u):.3e}")
