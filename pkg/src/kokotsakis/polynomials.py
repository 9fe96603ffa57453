"""Dense bivariate polynomials and Sylvester resultants.

Coefficients are stored in ascending order: ``c[i, j]`` multiplies
``x**i * y**j``.  Arrays may hold floats or `fractions.Fraction` objects
(``dtype=object``); every routine here works with both, which is what the
exact certification path relies on.
"""
from fractions import Fraction

import numpy as np

from .errors import BothZero

MAX_DEGREE = 12


def _is_exact(arr):
    return np.asarray(arr).dtype == object


def _zeros(shape, exact):
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape)


class BivarPoly:
    """Dense polynomial in two variables ``(x, y)`` = ``(t1, t3)``."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=object if _is_exact(coeffs) else float, ndmin=2)
        c = _trim2(c)
        if c.shape[0] > MAX_DEGREE + 1 or c.shape[1] > MAX_DEGREE + 1:
            raise ValueError(f"degree {c.shape[0] - 1, c.shape[1] - 1} exceeds {MAX_DEGREE}")
        self.c = c

    @classmethod
    def from_x(cls, coeffs):
        """Polynomial in ``x`` only."""
        return cls(np.array(coeffs, dtype=object if _is_exact(coeffs) else float)[:, None])

    @classmethod
    def from_y(cls, coeffs):
        return cls(np.array(coeffs, dtype=object if _is_exact(coeffs) else float)[None, :])

    @property
    def exact(self):
        return self.c.dtype == object

    @property
    def degrees(self):
        """Tight degrees ``(deg_x, deg_y)``; ``(-1, -1)`` for the zero polynomial."""
        if self.is_zero():
            return (-1, -1)
        return (self.c.shape[0] - 1, self.c.shape[1] - 1)

    def is_zero(self):
        return not np.any(self.c != 0)

    def norm(self):
        return float(np.max(np.abs(self.c.astype(float)))) if self.c.size else 0.0

    def __add__(self, other):
        other = _coerce(other, self.exact)
        shape = (max(self.c.shape[0], other.c.shape[0]), max(self.c.shape[1], other.c.shape[1]))
        out = _zeros(shape, self.exact or other.exact)
        out[: self.c.shape[0], : self.c.shape[1]] += self.c
        out[: other.c.shape[0], : other.c.shape[1]] += other.c
        return BivarPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return BivarPoly(-self.c)

    def __sub__(self, other):
        return self + (-_coerce(other, self.exact))

    def __rsub__(self, other):
        return _coerce(other, self.exact) - self

    def __mul__(self, other):
        if not isinstance(other, BivarPoly):
            return BivarPoly(self.c * other)
        exact = self.exact or other.exact
        p, q = self.c, other.c
        out = _zeros((p.shape[0] + q.shape[0] - 1, p.shape[1] + q.shape[1] - 1), exact)
        for i in range(p.shape[0]):
            for j in range(p.shape[1]):
                if p[i, j] != 0:
                    out[i : i + q.shape[0], j : j + q.shape[1]] += p[i, j] * q
        return BivarPoly(out)

    __rmul__ = __mul__

    def __call__(self, x, y):
        """Horner evaluation at a point."""
        rows = [_horner(row, y) for row in self.c]
        return _horner(rows, x)

    def in_y_at(self, x):
        """Specialize ``x`` and return the ascending coefficients in ``y``."""
        c = self.c
        out = c[-1].copy()
        for row in c[-2::-1]:
            out = out * x + row
        return out

    def __repr__(self):
        return f"BivarPoly(degrees={self.degrees})"


def _coerce(other, exact):
    if isinstance(other, BivarPoly):
        return other
    return BivarPoly(np.array([[other]], dtype=object if exact else float))


def _trim2(c):
    nz = c != 0
    if not nz.any():
        return c[:1, :1] * 0
    rows = np.flatnonzero(nz.any(axis=1))
    cols = np.flatnonzero(nz.any(axis=0))
    return c[: rows[-1] + 1, : cols[-1] + 1]


def _horner(coeffs, x):
    acc = 0
    for c in reversed(list(coeffs)):
        acc = acc * x + c
    return acc


def trim(coeffs, rtol=0.0):
    """Drop top coefficients whose magnitude is ``<= rtol * max|c|``."""
    c = np.asarray(coeffs)
    if c.size == 0:
        return c
    mags = np.abs(c.astype(float)) if c.dtype == object else np.abs(c)
    cutoff = rtol * mags.max()
    k = c.size
    while k > 0 and (mags[k - 1] <= cutoff if rtol > 0 else c[k - 1] == 0):
        k -= 1
    return c[:k]


def degree(coeffs):
    return len(trim(coeffs)) - 1


def sylvester_matrix(f, g):
    """Sylvester matrix of two ascending coefficient arrays (trimmed).

    Rows hold the descending coefficients of ``f`` shifted ``deg g`` times,
    then those of ``g`` shifted ``deg f`` times.
    """
    f = trim(f)
    g = trim(g)
    m, n = len(f) - 1, len(g) - 1
    size = m + n
    exact = _is_exact(f) or _is_exact(g)
    S = _zeros((size, size), exact)
    fd, gd = f[::-1], g[::-1]
    for k in range(n):
        S[k, k : k + m + 1] = fd
    for k in range(m):
        S[n + k, k : k + n + 1] = gd
    return S


def determinant(M):
    """Determinant by Gaussian elimination with row pivoting.

    Float matrices use partial (largest-magnitude) pivoting; exact matrices
    use the first nonzero pivot so the result is exact.
    """
    M = np.array(M, dtype=object if _is_exact(M) else float)
    n = M.shape[0]
    if n == 0:
        return Fraction(1) if M.dtype == object else 1.0
    exact = M.dtype == object
    det = Fraction(1) if exact else 1.0
    for k in range(n):
        col = M[k:, k]
        if exact:
            nz = [j for j, x in enumerate(col) if x != 0]
            if not nz:
                return Fraction(0)
            p = k + nz[0]
        else:
            p = k + int(np.argmax(np.abs(col)))
            if M[p, k] == 0.0:
                return 0.0
        if p != k:
            M[[k, p]] = M[[p, k]]
            det = -det
        pivot = M[k, k]
        det = det * pivot
        if k + 1 < n:
            factors = M[k + 1 :, k] / pivot
            M[k + 1 :, k:] -= np.outer(factors, M[k, k:])
    return det


def resultant(f, g):
    """Resultant of two univariate polynomials (ascending coefficients).

    If exactly one of them is the zero polynomial the resultant is 0.
    """
    f = trim(f)
    g = trim(g)
    if len(f) == 0 and len(g) == 0:
        raise BothZero("resultant of two zero polynomials is undefined")
    if len(f) == 0 or len(g) == 0:
        return Fraction(0) if (_is_exact(f) or _is_exact(g)) else 0.0
    return determinant(sylvester_matrix(f, g))


def to_fraction_array(values):
    out = np.empty(len(values), dtype=object)
    for k, x in enumerate(values):
        out[k] = Fraction(x)
    return out
