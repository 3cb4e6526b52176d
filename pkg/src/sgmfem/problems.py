"""The two benchmark problems on the unit square.

``tp1``: all-Dirichlet boundary, ``E = 1 + 0.1 y_1`` and a manufactured
divergence-free solution ``u = u_bar(x) / E`` with ``p = p~ = 0``.
``tp2``: Neumann right edge, horizontal body force (0.1, 0) and the
cosine expansion of E with algebraic decay.
"""
from dataclasses import dataclass

import numpy as np

from .femkit.assembly import lame_constants
from .femkit.coefficients import affine_scalar, cosine_expansion
from .mesh import BcConfig

PROBLEMS = ("tp1", "tp2")


def zero_force(x):
    return np.zeros(np.shape(x))


def tp1_force(nu):
    """Body force ``-(alpha/2) Lap(u_bar)`` for the manufactured tp1 solution.

    Since ``div u = 0`` and E is spatially constant, ``-div(alpha E eps(u))``
    reduces to ``-(alpha/2) Lap(E u)``, independent of y.
    """
    alpha, _ = lame_constants(nu)
    pi = np.pi

    def f(x):
        x1, x2 = x[..., 0], x[..., 1]
        f1 = -alpha * pi ** 3 * np.cos(pi * x2) * np.sin(pi * x2) * (2 * np.cos(2 * pi * x1) - 1)
        f2 = alpha * pi ** 3 * np.cos(pi * x1) * np.sin(pi * x1) * (2 * np.cos(2 * pi * x2) - 1)
        return np.stack([f1, f2], axis=-1)

    return f


def tp1_ubar(x):
    """``E * u`` for tp1 and its gradient; x of shape (..., 2).

    Returns values (..., 2) and gradients (..., 2, 2) with ``g[..., c, d] = d u_c / d x_d``.
    """
    pi = np.pi
    x1, x2 = x[..., 0], x[..., 1]
    s1, c1 = np.sin(pi * x1), np.cos(pi * x1)
    s2, c2 = np.sin(pi * x2), np.cos(pi * x2)
    u1 = pi * c2 * s2 * s1 ** 2
    u2 = -pi * c1 * s1 * s2 ** 2
    g = np.empty(x.shape[:-1] + (2, 2))
    g[..., 0, 0] = pi * c2 * s2 * 2 * pi * s1 * c1
    g[..., 0, 1] = pi ** 2 * np.cos(2 * pi * x2) * s1 ** 2
    g[..., 1, 0] = -pi ** 2 * np.cos(2 * pi * x1) * s2 ** 2
    g[..., 1, 1] = -pi * c1 * s1 * 2 * pi * s2 * c2
    return np.stack([u1, u2], axis=-1), g


@dataclass(frozen=True, eq=False)
class ProblemDescriptor:
    """Data defining one benchmark problem."""

    id: str
    nu: float
    bc: BcConfig
    force: object
    coeff: object

    @property
    def has_exact_solution(self):
        return self.id == "tp1"


def tp1(nu):
    return ProblemDescriptor("tp1", nu, BcConfig(), tp1_force(nu), affine_scalar(1.0, 0.1))


def tp2(nu, sigma=2.0, alpha_bar=0.5, truncation=1):
    lame_constants(nu)

    def force(x):
        out = np.zeros(np.shape(x))
        out[..., 0] = 0.1
        return out

    coeff = cosine_expansion(alpha_bar, sigma, truncation)
    return ProblemDescriptor("tp2", nu, BcConfig(frozenset({"right"})), force, coeff)
