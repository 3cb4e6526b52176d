"""Multi-indices, index sets and Legendre coupling matrices.

The parametric basis is the tensor product of Legendre polynomials
orthonormal with respect to the uniform probability measure on [-1, 1].
Multiplication by ``y_k`` couples index ``a`` only to ``a +/- t(k)``,
with weight ``c_i = i / sqrt(4 i^2 - 1)``, ``i = max(a_k, b_k)``.
"""
from functools import total_ordering

import numpy as np
import scipy.sparse as sp


@total_ordering
class MultiIndex:
    """Finitely supported sequence of nonnegative degrees.

    Stored canonically as a sorted tuple of ``(parameter, degree)`` pairs
    with positive degrees; parameters are numbered from 1.
    """

    __slots__ = ("_items",)

    def __init__(self, items=()):
        if isinstance(items, dict):
            items = items.items()
        clean = {}
        for n, d in items:
            n, d = int(n), int(d)
            if n < 1:
                raise ValueError(f"parameters are numbered from 1, got {n}")
            if d < 0:
                raise ValueError(f"negative degree {d} for parameter {n}")
            if d:
                clean[n] = d
        self._items = tuple(sorted(clean.items()))

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def unit(cls, n, degree=1):
        return cls({n: degree})

    @classmethod
    def from_dense(cls, degrees):
        return cls((i + 1, d) for i, d in enumerate(degrees))

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if not (text.startswith("(") and text.endswith(")")):
            raise ValueError(f"malformed multi-index {text!r}")
        body = text[1:-1].strip()
        if not body:
            return cls()
        return cls(tuple(map(int, part.split(":"))) for part in body.split(","))

    def __getitem__(self, n):
        for m, d in self._items:
            if m == n:
                return d
        return 0

    def items(self):
        return self._items

    @property
    def support(self):
        return tuple(n for n, _ in self._items)

    @property
    def max_parameter(self):
        return self._items[-1][0] if self._items else 0

    @property
    def total_degree(self):
        return sum(d for _, d in self._items)

    def is_zero(self):
        return not self._items

    def shifted(self, n, step):
        """``self + step * t(n)``, or ``None`` if a degree would go negative."""
        d = self[n] + step
        if d < 0:
            return None
        out = dict(self._items)
        out[n] = d
        return MultiIndex(out)

    def dense(self, length):
        v = np.zeros(length, dtype=int)
        for n, d in self._items:
            if n <= length:
                v[n - 1] = d
        return v

    def __eq__(self, other):
        return isinstance(other, MultiIndex) and self._items == other._items

    def __hash__(self):
        return hash(self._items)

    def __lt__(self, other):
        # lowest parameter number first, then lowest degree
        return self._items < other._items

    def __str__(self):
        return "(" + ",".join(f"{n}:{d}" for n, d in self._items) + ")"

    def __repr__(self):
        return f"MultiIndex{self}"


def _as_index(a):
    if isinstance(a, MultiIndex):
        return a
    if isinstance(a, str):
        return MultiIndex.parse(a)
    if isinstance(a, dict):
        return MultiIndex(a)
    return MultiIndex.from_dense(a)


class IndexSet:
    """Ordered collection of distinct multi-indices (order fixes block layout)."""

    def __init__(self, indices=()):
        self._list = []
        self._pos = {}
        for a in indices:
            self.add(a)

    @classmethod
    def zero(cls):
        return cls([MultiIndex()])

    @classmethod
    def total_degree_1d(cls, k, parameter=1):
        """``{0, t(n), 2 t(n), ..., k t(n)}``."""
        return cls([MultiIndex.unit(parameter, d) for d in range(k + 1)])

    def add(self, a):
        a = _as_index(a)
        if a in self._pos:
            return False
        self._pos[a] = len(self._list)
        self._list.append(a)
        return True

    def union(self, other):
        out = IndexSet(self._list)
        for a in other:
            out.add(a)
        return out

    def position(self, a):
        return self._pos[_as_index(a)]

    def __contains__(self, a):
        return _as_index(a) in self._pos

    def __iter__(self):
        return iter(self._list)

    def __len__(self):
        return len(self._list)

    def __getitem__(self, i):
        return self._list[i]

    def __eq__(self, other):
        return isinstance(other, IndexSet) and set(self._list) == set(other._list)

    @property
    def n_active(self):
        """Number of active parameters ``M_Lambda`` (largest parameter in use)."""
        return max((a.max_parameter for a in self._list), default=0)

    def sorted(self):
        return IndexSet(sorted(self._list))

    def __repr__(self):
        return "IndexSet{" + ", ".join(map(str, self._list)) + "}"


def legendre_coupling(i):
    """``int y psi_{i-1} psi_i d pi`` for orthonormal Legendre polynomials, i >= 1."""
    return i / np.sqrt(4.0 * i * i - 1.0)


def coupling_matrix(k, rows, cols=None):
    """Sparse matrix ``[G_k]_{a,b} = int y_k psi_a psi_b d pi`` (``y_0 = 1``)."""
    cols = rows if cols is None else cols
    r, c, v = [], [], []
    for i, a in enumerate(rows):
        if k == 0:
            if a in cols:
                r.append(i)
                c.append(cols.position(a))
                v.append(1.0)
            continue
        for step in (-1, 1):
            b = a.shifted(k, step)
            if b is not None and b in cols:
                r.append(i)
                c.append(cols.position(b))
                v.append(legendre_coupling(max(a[k], b[k])))
    return sp.csr_matrix((v, (r, c)), shape=(len(rows), len(cols)))


def _neighbours(tau, n_max):
    for n in range(1, n_max + 1):
        for step in (1, -1):
            b = tau.shifted(n, step)
            if b is not None:
                yield b


def detail_index_set(lam):
    """Indices one unit step outside ``lam`` in parameters ``1..M_lam + 1``."""
    n_max = lam.n_active + 1
    out = IndexSet()
    for tau in lam:
        for b in _neighbours(tau, n_max):
            if b not in lam:
                out.add(b)
    return out.sorted()


def boundary_membership(alpha, lam):
    """True iff ``alpha`` (not in ``lam``) differs from some member by one unit step."""
    alpha = _as_index(alpha)
    if alpha in lam:
        raise ValueError(f"{alpha} already belongs to the index set")
    for n, _ in alpha.items():
        if alpha.shifted(n, -1) in lam:
            return True
    # alpha + t(n) in lam: only parameters present in lam can matter
    for n in range(1, lam.n_active + 1):
        if alpha.shifted(n, 1) in lam:
            return True
    return False


def legendre_values(degree, y):
    """Orthonormal Legendre polynomials psi_0..psi_degree at points ``y`` (three-term recurrence)."""
    y = np.asarray(y, dtype=float)
    out = np.zeros((degree + 1,) + y.shape)
    out[0] = 1.0
    if degree >= 1:
        out[1] = np.sqrt(3.0) * y
    for i in range(1, degree):
        # y psi_i = c_{i+1} psi_{i+1} + c_i psi_{i-1}
        out[i + 1] = (y * out[i] - legendre_coupling(i) * out[i - 1]) / legendre_coupling(i + 1)
    return out


def evaluate_basis(lam, y):
    """Values of psi_a at parameter points ``y`` of shape (npts, n_params): (len(lam), npts)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    n_params = y.shape[1]
    out = np.ones((len(lam), y.shape[0]))
    for i, a in enumerate(lam):
        for n, d in a.items():
            if n > n_params:
                raise ValueError(f"parameter {n} not supplied")
            out[i] *= legendre_values(d, y[:, n - 1])[d]
    return out
