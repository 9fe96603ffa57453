"""Vector and planar projective primitives.

Vectors in space are plain ``numpy`` arrays of shape ``(3,)``.  Points and
lines of the central plane are kept in homogeneous coordinates, normalized
to unit Euclidean norm after every construction so that long chains of
intersections neither overflow nor underflow.
"""
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentLines, InfiniteEndpoint, NotCollinear

DEFAULT_TOL = 1e-9


def triple_product(u, v, w):
    """Return the determinant of the 3x3 matrix with rows ``u, v, w``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return float(
        u[0] * (v[1] * w[2] - v[2] * w[1])
        - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
    )


def triple_products(u, v, w):
    """Row-wise triple products of three ``(m, 3)`` arrays."""
    return np.einsum("ij,ij->i", np.cross(u, v), w)


def unit(x):
    x = np.asarray(x, dtype=float)
    return x / np.linalg.norm(x)


def angle_between(u, v):
    """Unsigned angle in ``[0, pi]`` between two nonzero vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    # atan2 form keeps full precision near 0 and pi where arccos does not
    return float(np.arctan2(np.linalg.norm(np.cross(u, v)), np.dot(u, v)))


def _normalize_homogeneous(h):
    h = np.asarray(h, dtype=float)
    norm = np.linalg.norm(h)
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("homogeneous coordinates must be finite and not all zero")
    h = h / norm
    # fix the sign so equal points compare equal
    if h[2] != 0.0:
        sign = np.sign(h[2])
    elif h[0] != 0.0:
        sign = np.sign(h[0])
    else:
        sign = np.sign(h[1])
    return h * sign


@dataclass(frozen=True, eq=False)
class ProjectivePoint2:
    """A point of the central plane, possibly at infinity (``h[2] == 0``)."""

    h: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h", _normalize_homogeneous(self.h))

    @classmethod
    def from_affine(cls, x, y):
        return cls(np.array([x, y, 1.0]))

    def is_infinite(self, tol=0.0):
        """True when the point lies on the line at infinity.

        ``tol`` bounds ``|h2| / |(h0, h1)|``, i.e. points farther than
        ``1 / tol`` units from the origin are treated as infinite.
        """
        return abs(self.h[2]) <= tol * np.hypot(self.h[0], self.h[1])

    @property
    def at_infinity(self):
        return self.h[2] == 0.0

    def affine(self):
        if self.h[2] == 0.0:
            raise InfiniteEndpoint("point at infinity has no affine coordinates")
        return self.h[:2] / self.h[2]

    def direction(self):
        """Unit direction of the point, meaningful for points at infinity."""
        d = self.h[:2]
        return d / np.linalg.norm(d)

    def __repr__(self):
        if self.h[2] == 0.0:
            return f"ProjectivePoint2(inf, direction={self.h[:2].tolist()})"
        x, y = self.affine()
        return f"ProjectivePoint2({x:.12g}, {y:.12g})"


@dataclass(frozen=True, eq=False)
class Line2:
    """The affine line ``l0*x + l1*y + l2 = 0`` in homogeneous form."""

    l: np.ndarray

    def __post_init__(self):
        l = np.asarray(self.l, dtype=float)
        if l[0] == 0.0 and l[1] == 0.0:
            raise ValueError("the line at infinity is not a valid Line2")
        l = l / np.linalg.norm(l)
        object.__setattr__(self, "l", l)

    @classmethod
    def through(cls, p, q):
        return cls(np.cross(_homogeneous(p), _homogeneous(q)))

    @classmethod
    def from_point_direction(cls, p, d):
        p = np.asarray(p, dtype=float)
        d = np.asarray(d, dtype=float)
        return cls(np.array([-d[1], d[0], d[1] * p[0] - d[0] * p[1]]))

    def residual(self, p):
        """Homogeneous incidence residual ``<l, p>`` for a unit-norm ``p``."""
        return float(np.dot(self.l, _homogeneous(p, normalize=True)))

    def signed_distance(self, p):
        p = np.asarray(p, dtype=float)
        return float((self.l[0] * p[0] + self.l[1] * p[1] + self.l[2]) / np.hypot(self.l[0], self.l[1]))


def _homogeneous(p, normalize=False):
    if isinstance(p, ProjectivePoint2):
        return p.h
    p = np.asarray(p, dtype=float)
    h = p if p.shape == (3,) else np.array([p[0], p[1], 1.0])
    return h / np.linalg.norm(h) if normalize else h


def intersect_lines(l1, l2, tol=DEFAULT_TOL):
    """Projective intersection point of two lines.

    Raises `CoincidentLines` when the lines are scalar multiples of each
    other (within ``tol``).  Parallel lines meet at a point at infinity.
    """
    h = np.cross(l1.l, l2.l)
    if np.linalg.norm(h) <= tol:
        raise CoincidentLines("lines coincide; intersection is not a point")
    return ProjectivePoint2(h)


def join(p, q, tol=DEFAULT_TOL):
    """Line through two distinct points (homogeneous cross product)."""
    hp = _homogeneous(p, normalize=True)
    hq = _homogeneous(q, normalize=True)
    l = np.cross(hp, hq)
    if np.linalg.norm(l) <= tol:
        raise CoincidentLines("points coincide; joining line is undefined")
    return Line2(l)


def meet(p, q, r, s, tol=DEFAULT_TOL):
    """``[p, q; r, s]``: intersection of line ``pq`` with line ``rs``."""
    return intersect_lines(join(p, q, tol), join(r, s, tol), tol)


def _finite_affine(p, name):
    if isinstance(p, ProjectivePoint2):
        if p.at_infinity:
            raise InfiniteEndpoint(f"{name} is at infinity")
        return p.affine()
    return np.asarray(p, dtype=float)[:2]


def affine_ratio(A, B, C, tol=DEFAULT_TOL):
    """Return ``t`` with ``A = t*B + (1 - t)*C``.

    The ratio is read off the dominant coordinate of ``B - C``.  ``B`` and
    ``C`` must be finite and distinct; ``A`` must lie on line ``BC`` up to
    ``tol`` relative to the scale of the inputs.
    """
    b = _finite_affine(B, "B")
    c = _finite_affine(C, "C")
    a = _finite_affine(A, "A")
    d = b - c
    scale = max(np.abs(np.concatenate([a, b, c])).max(), np.abs(d).max())
    if np.abs(d).max() <= tol * scale:
        raise NotCollinear("B and C coincide")
    k = int(np.argmax(np.abs(d)))
    t = (a[k] - c[k]) / d[k]
    off = (a - c) - t * d
    if np.linalg.norm(off) > tol * scale:
        raise NotCollinear(f"A is off line BC by {np.linalg.norm(off):.3g}")
    return float(t)


def orientation_sign(e1, e2, tol=DEFAULT_TOL):
    """Sign of the 2x2 determinant ``det[e1, e2]``; 0 when collinear."""
    det = e1[0] * e2[1] - e1[1] * e2[0]
    if abs(det) <= tol * np.hypot(*e1[:2]) * np.hypot(*e2[:2]):
        return 0
    return 1 if det > 0 else -1


def rotation_matrix(axis, angle):
    """Rodrigues rotation about ``axis`` by ``angle`` radians."""
    k = unit(axis)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )
