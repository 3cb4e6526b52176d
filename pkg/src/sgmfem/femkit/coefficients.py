"""Affine parametric Young's modulus ``E(x, y) = e_0(x) + sum_m e_m(x) y_m``."""
import math
from dataclasses import dataclass, replace

import numpy as np

from ..errors import CoefficientError


def zeta(s, tol=1e-12):
    """Riemann zeta for real ``s > 1`` by direct summation.

    The partial sum is closed with the Euler-Maclaurin tail
    ``N^(1-s)/(s-1) + N^(-s)/2 + s N^(-s-1)/12``, whose neglected remainder
    is O(N^(-s-3)); N is grown until successive estimates agree to ``tol``.
    """
    if s <= 1:
        raise ValueError("zeta diverges for s <= 1")
    prev = None
    N = 16
    while True:
        k = np.arange(1, N, dtype=float)
        partial = math.fsum(k ** (-s))
        tail = N ** (1 - s) / (s - 1) + 0.5 * N ** (-s) + s * N ** (-s - 1) / 12
        est = partial + tail
        if prev is not None and abs(est - prev) <= tol * abs(est):
            return est
        prev = est
        N *= 2


def diagonal_frequencies(m):
    """Index maps (beta_1(m), beta_2(m)) enumerating N_0^2 along anti-diagonals."""
    if m < 1:
        raise ValueError("expansion terms are numbered from 1")
    k = (math.isqrt(8 * m + 1) - 1) // 2
    b1 = m - k * (k + 1) // 2
    b2 = k - b1
    return b1, b2


@dataclass(frozen=True)
class CoefficientField:
    """Parametric Young's modulus.

    ``kind="affine-scalar"``: spatially constant terms ``e0`` and ``e1``
    (``e1`` may be a tuple for several constant terms).
    ``kind="cosine-expansion"``: ``e_0 = 1`` and
    ``e_m(x) = amplitude * m**-decay * cos(2 pi b1 x1) cos(2 pi b2 x2)``
    truncated after ``truncation`` terms.
    """

    kind: str
    e0: float = 1.0
    e1: tuple = ()
    amplitude: float = 0.0
    decay: float = 2.0
    truncation: int = 0

    def __post_init__(self):
        if self.kind not in ("affine-scalar", "cosine-expansion"):
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "affine-scalar":
            e1 = self.e1
            if np.isscalar(e1):
                e1 = (float(e1),)
            object.__setattr__(self, "e1", tuple(float(v) for v in e1))
            object.__setattr__(self, "truncation", len(self.e1))
        elif self.truncation < 1:
            raise ValueError("cosine expansion needs truncation >= 1")
        check_positivity(self)

    @property
    def n_terms(self):
        """Number of parametric terms M (index 0 excluded)."""
        return self.truncation

    def with_truncation(self, M):
        if self.kind != "cosine-expansion":
            if M > self.truncation:
                raise ValueError("affine-scalar coefficients cannot be extended")
            return self
        if M <= self.truncation:
            return self
        return replace(self, truncation=int(M))

    def evaluate(self, m, x):
        """Values of e_m at points ``x`` of shape (..., 2)."""
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        if m < 0 or m > self.truncation:
            raise IndexError(f"term {m} outside 0..{self.truncation}")
        if self.kind == "affine-scalar":
            val = self.e0 if m == 0 else self.e1[m - 1]
            return np.full(shape, val)
        if m == 0:
            return np.ones(shape)
        b1, b2 = diagonal_frequencies(m)
        amp = self.amplitude * m ** (-self.decay)
        return amp * np.cos(2 * np.pi * b1 * x[..., 0]) * np.cos(2 * np.pi * b2 * x[..., 1])

    def is_constant(self, m):
        if self.kind == "affine-scalar":
            return True
        return m == 0

    def is_zero(self, m):
        if self.kind == "affine-scalar":
            return m > 0 and self.e1[m - 1] == 0.0
        return m > 0 and self.amplitude == 0.0


def evaluate_coefficient(coeff, m, x):
    return coeff.evaluate(m, x)


def check_positivity(coeff, samples=65):
    """Verify sum_k sup|e_k| < inf e_0 by sampling on a uniform grid."""
    t = np.linspace(0.0, 1.0, samples)
    X, Y = np.meshgrid(t, t)
    pts = np.stack([X, Y], axis=-1)
    e0_min = coeff.evaluate(0, pts).min()
    total = sum(np.abs(coeff.evaluate(k, pts)).max() for k in range(1, coeff.truncation + 1))
    if not (e0_min > 0 and total < e0_min):
        raise CoefficientError(
            f"E is not uniformly positive: sum sup|e_k| = {total:.6g} >= inf e_0 = {e0_min:.6g}"
        )


def affine_scalar(e0=1.0, e1=0.1):
    return CoefficientField("affine-scalar", e0=e0, e1=e1)


def cosine_expansion(amplitude, decay, truncation=1):
    """Expansion with terms ``amplitude * m**-decay``; requires amplitude < 1/zeta(decay)."""
    if decay <= 1:
        raise CoefficientError(f"decay exponent must exceed 1, got {decay}")
    if not 0 < amplitude < 1.0 / zeta(decay):
        raise CoefficientError(
            f"amplitude {amplitude} outside (0, 1/zeta({decay}) = {1.0 / zeta(decay):.6f})"
        )
    return CoefficientField("cosine-expansion", amplitude=amplitude, decay=decay, truncation=truncation)
