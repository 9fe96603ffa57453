"""First-order flexibility of Kokotsakis meshes.

A single vertex with one fixed face has a one-dimensional space of
infinitesimal motions.  Chaining the corners around the middle face closes
up exactly when the cyclic product

    chi(M) = prod_i (a[i-1], v[i], w[i]) / (a[i], v[i], w[i])

equals one, which is the infinitesimal flexibility criterion.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCorner
from .geometry import DEFAULT_TOL, triple_product, triple_products
from .mesh import derived_vectors

NULLSPACE_RTOL = 1e-10


@dataclass(frozen=True)
class ChiValue:
    value: float
    factors: np.ndarray
    numerators: np.ndarray
    denominators: np.ndarray

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class InfinitesimalMotion:
    vdot: np.ndarray
    wdot: np.ndarray
    lam: float


def corner_triple_products(mesh):
    """``(a[i-1], v[i], w[i])`` and ``(a[i], v[i], w[i])`` for every vertex."""
    a, v, w = derived_vectors(mesh)
    prev = np.roll(a, 1, axis=0)
    return triple_products(prev, v, w), triple_products(a, v, w)


def _check_denominators(den, scale, tol):
    bad = np.flatnonzero(np.abs(den) <= tol * scale**3)
    if bad.size:
        raise DegenerateCorner(int(bad[0]), f"(a{bad[0] + 1}, v{bad[0] + 1}, w{bad[0] + 1}) vanishes")


def chi(mesh, tol=DEFAULT_TOL):
    num, den = corner_triple_products(mesh)
    _check_denominators(den, mesh.scale, tol)
    factors = num / den
    # product of ratios rather than ratio of products: tames dynamic range
    return ChiValue(float(np.prod(factors)), factors, num, den)


def closed_form_motion(b, c, v, w, lam=1.0, tol=DEFAULT_TOL):
    """The infinitesimal motion of a single corner with fixed face ``b, c``.

    Returns ``(vdot, wdot) = lam * ([b, v] / (b, v, w), [c, w] / (c, v, w))``.
    """
    b, c, v, w = (np.asarray(x, dtype=float) for x in (b, c, v, w))
    scale = max(np.linalg.norm(x) for x in (b, c, v, w))
    dv = triple_product(b, v, w)
    dw = triple_product(c, v, w)
    for index, d in enumerate((dv, dw)):
        if abs(d) <= tol * scale**3:
            raise DegenerateCorner(index, "b or c lies in the span of v and w")
    return lam * np.cross(b, v) / dv, lam * np.cross(c, w) / dw


def corner_system(b, c, v, w):
    """The 5x6 linear constraints on ``(vdot, wdot)``."""
    z = np.zeros(3)
    return np.array(
        [
            np.concatenate([v, z]),
            np.concatenate([z, w]),
            np.concatenate([w, v]),
            np.concatenate([b, z]),
            np.concatenate([z, c]),
        ],
        dtype=float,
    )


@dataclass(frozen=True)
class Nullspace:
    basis: np.ndarray  # (dim, 6), orthonormal rows
    singular_values: np.ndarray

    @property
    def dim(self):
        return self.basis.shape[0]


def motion_nullspace(b, c, v, w, rtol=NULLSPACE_RTOL):
    """Orthonormal basis of the solutions of the corner system."""
    M = corner_system(*(np.asarray(x, dtype=float) for x in (b, c, v, w)))
    _, s, Vt = np.linalg.svd(M)
    smax = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.sum(s > rtol * smax)) if s[0] > 0 else 0
    return Nullspace(Vt[rank:], s)


@dataclass(frozen=True)
class FlexVerdict:
    flexible: bool
    residual: float
    chi: ChiValue


def is_infinitesimally_flexible(mesh, tol=1e-8):
    x = chi(mesh)
    r = abs(x.value - 1.0)
    return FlexVerdict(r <= tol, r, x)


def f1_numerator(mesh):
    """``(chi - 1) * prod_i (a[i], v[i], w[i])``: the polynomial numerator of ``chi - 1``."""
    num, den = corner_triple_products(mesh)
    return float(np.prod(num) - np.prod(den))


def corner_motions(mesh):
    """Per-corner closed-form motions with ``lam`` chained along the middle face.

    Corner ``i`` uses ``b = -a[i-1]``, ``c = a[i]``.  Consecutive corners
    share the edge face along ``a[i]``, so their scales are chosen to make
    that face rotate at one rate; after a full turn the mismatch is ``chi``.
    """
    a, v, w = derived_vectors(mesh)
    num, den = corner_triple_products(mesh)
    motions = []
    lam = num[0]
    for i in range(mesh.n):
        vdot, wdot = closed_form_motion(-a[i - 1], a[i], v[i], w[i], lam)
        motions.append(InfinitesimalMotion(vdot, wdot, lam))
        lam = lam / den[i] * num[(i + 1) % mesh.n]
    return motions
