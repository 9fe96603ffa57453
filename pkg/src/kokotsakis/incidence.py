"""Planar traces of the wing planes and the Ceva-Menelaus conditions.

Each wing plane through ``A[i], V[i], W[i]`` cuts the central plane in a
line ``l[i]`` through ``A[i]``.  Consecutive traces meet in
``B[i] = l[i] ^ l[i+1]``, so ``A[i]`` lies on the segment line
``B[i-1] B[i]`` and ``A[i] = t[i] B[i-1] + (1 - t[i]) B[i]``.  The product
``prod (1 - t[i]) / t[i]`` equals ``(-1)**n / chi``; an infinitesimally
flexible mesh therefore has product ``+1`` (n even) or ``-1`` (n odd), and
each of those two values has a ruler-only witness construction.

Indices are 0-based throughout: ``B[i]`` joins ``l[i]`` and ``l[i+1]``.
"""
import io
from dataclasses import dataclass

import numpy as np

from .errors import (
    CoincidentLines,
    ConstructionDegenerate,
    InfiniteEndpoint,
    NonPlanarCentralFace,
    UnsupportedInfinityPattern,
    WingPlaneParallelToBase,
)
from .geometry import DEFAULT_TOL, Line2, ProjectivePoint2, affine_ratio, intersect_lines, join
from .infinitesimal import chi as chi_value

INCIDENCE_RTOL = 1e-7
INFINITY_RTOL = 1e-12


@dataclass(frozen=True)
class PlaneFrame:
    """Orthonormal chart ``x = origin + X e1 + Y e2`` of the central plane."""

    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    normal: np.ndarray

    def to_plane(self, points):
        d = np.atleast_2d(points) - self.origin
        return np.column_stack([d @ self.e1, d @ self.e2])

    def to_space(self, xy):
        xy = np.atleast_2d(xy)
        return self.origin + xy[:, :1] * self.e1 + xy[:, 1:2] * self.e2


def best_fit_frame(points, tol=DEFAULT_TOL):
    """Least-squares plane through ``points``; rejects non-planar input."""
    P = np.asarray(points, dtype=float)
    c = P.mean(axis=0)
    _, s, Vt = np.linalg.svd(P - c)
    e1, _, normal = Vt
    # the polygon runs counterclockwise in the chart
    winding = np.cross(P - c, np.roll(P, -1, axis=0) - c).sum(axis=0)
    if np.dot(winding, normal) < 0:
        normal = -normal
    scale = np.abs(P - c).max() or 1.0
    off = np.abs((P - c) @ normal).max()
    if off > tol * scale:
        raise NonPlanarCentralFace(f"middle face deviates from its plane by {off:.3g}")
    return PlaneFrame(c, e1, np.cross(normal, e1), normal)


@dataclass(frozen=True)
class TraceConfiguration:
    """Traces, corner points and ratios of one middle polygon.

    ``t[i]`` is ``None`` when ``B[i-1]`` or ``B[i]`` is at infinity.
    """

    frame: PlaneFrame | None
    A: np.ndarray  # (n, 2)
    lines: tuple
    B: tuple
    t: tuple

    @property
    def n(self):
        return len(self.A)

    @property
    def diameter(self):
        return _diameter(self.A)

    def infinite(self):
        return [i for i, b in enumerate(self.B) if _is_infinite(b, self.diameter)]


def _diameter(points):
    d = points[:, None, :] - points[None, :, :]
    return float(np.sqrt((d**2).sum(-1)).max())


def _is_infinite(point, diameter):
    return point.is_infinite(INFINITY_RTOL / max(diameter, 1e-300))


def _ratios(A, B, diameter, tol):
    n = len(A)
    out = []
    for i in range(n):
        prev, cur = B[i - 1], B[i]
        if _is_infinite(prev, diameter) or _is_infinite(cur, diameter):
            out.append(None)
            continue
        out.append(affine_ratio(A[i], prev, cur, tol=tol * 1e2))
    return tuple(out)


def configuration_from_lines(A, lines, frame=None, tol=DEFAULT_TOL):
    """Assemble a configuration from points ``A[i]`` on lines ``l[i]``."""
    A = np.asarray(A, dtype=float)
    n = len(A)
    B = []
    for i in range(n):
        try:
            B.append(intersect_lines(lines[i], lines[(i + 1) % n], tol=tol))
        except CoincidentLines as exc:
            raise ConstructionDegenerate(f"B{i + 1}", f"traces l{i + 1} and l{(i + 1) % n + 1} coincide") from exc
    diameter = _diameter(A) or 1.0
    return TraceConfiguration(frame, A, tuple(lines), tuple(B), _ratios(A, B, diameter, tol))


def configuration_from_points(A, B, tol=DEFAULT_TOL):
    """Configuration with ``l[i] = B[i-1] B[i]`` for finite corner points."""
    B = np.asarray(B, dtype=float)
    lines = [join(B[i - 1], B[i]) for i in range(len(B))]
    return configuration_from_lines(A, lines, tol=tol)


def build_trace_configuration(mesh, tol=DEFAULT_TOL):
    """Planar trace configuration of a mesh with planar middle face."""
    frame = best_fit_frame(mesh.A, tol)
    A2 = frame.to_plane(mesh.A)
    lines = []
    for i in range(mesh.n):
        normal = np.cross(mesh.v[i], mesh.w[i])
        normal /= np.linalg.norm(normal)
        coeffs = np.array([normal @ frame.e1, normal @ frame.e2, (frame.origin - mesh.A[i]) @ normal])
        if np.hypot(coeffs[0], coeffs[1]) <= tol:
            raise WingPlaneParallelToBase(i)
        lines.append(Line2(coeffs))
    return configuration_from_lines(A2, lines, frame, tol)


def _signed_pair(config, j):
    """Limit of the two factors sharing an infinite ``B[j]``.

    Both traces through ``B[j]`` are parallel to its direction ``d``; the
    factors ``(1 - t)/t`` at ``j`` and ``j + 1`` tend to the ratio of the
    signed lengths ``<A[j] - B[j-1], d>`` and ``<A[j+1] - B[j+1], d>``.
    """
    n = config.n
    d = config.B[j].direction()
    prev = config.B[j - 1].affine()
    nxt = config.B[(j + 1) % n].affine()
    num = np.dot(config.A[j] - prev, d)
    den = np.dot(config.A[(j + 1) % n] - nxt, d)
    return num / den


def ceva_menelaus_product(config):
    """``prod (1 - t[i]) / t[i]``, with isolated infinite ``B`` handled as limits."""
    n = config.n
    inf = config.infinite()
    for j in inf:
        if (j + 1) % n in inf:
            raise UnsupportedInfinityPattern(f"B{j + 1} and B{(j + 1) % n + 1} are both at infinity")
    covered = set()
    product = 1.0
    for j in inf:
        product *= _signed_pair(config, j)
        covered.update({j, (j + 1) % n})
    for i in range(n):
        if i not in covered:
            product *= (1.0 - config.t[i]) / config.t[i]
    return float(product)


@dataclass(frozen=True)
class WitnessChain:
    O: list  # O[1..n-2] stored at index 0..n-3
    P: list  # P[0..n-2]


@dataclass(frozen=True)
class ConditionResult:
    holds: bool
    residual: float  # distance, in the units of the configuration
    chain: WitnessChain
    desargues: float | None = None  # concurrency residual of the n = 4 form


def _meet(p, q, r, s, step):
    try:
        return intersect_lines(join(p, q), join(r, s))
    except (CoincidentLines, ValueError) as exc:
        raise ConstructionDegenerate(step) from exc


def witness_chain(config, length):
    """``P[0] = A[0]``, then ``O[k] = [B[n-1], A[k]; B[k], P[k-1]]`` and
    ``P[k] = [B[k], B[n-1]; B[k-1], O[k]]`` for ``k = 1..length``.

    Points are kept homogeneous; the names follow 1-based labels, so
    ``A[k]`` here is the vertex labelled ``k + 1``.
    """
    n = config.n
    A = [ProjectivePoint2(np.array([x, y, 1.0])) for x, y in config.A]
    B = config.B
    last = B[n - 1]
    P = [A[0]]
    O = []
    for k in range(1, length + 1):
        o = _meet(last, A[k], B[k], P[k - 1], f"O{k}")
        O.append(o)
        P.append(_meet(B[k], last, B[k - 1], o, f"P{k}"))
    return WitnessChain(O, P)


def _distance(p, q):
    if p.at_infinity or q.at_infinity:
        return float("inf")
    return float(np.linalg.norm(p.affine() - q.affine()))


def _collinearity(p, a, b):
    """Distance of ``p`` from line ``ab``; for ``p`` at infinity, the
    transverse offset of its direction scaled by ``|ab|``."""
    ab = b - a
    length = np.linalg.norm(ab)
    if p.at_infinity:
        d = p.direction()
        return float(abs(d[0] * ab[1] - d[1] * ab[0]))
    x = p.affine() - a
    return float(abs(x[0] * ab[1] - x[1] * ab[0]) / length)


def desargues_residual(config):
    """Concurrency of ``B1B3``, ``A2A3``, ``A4A1`` for a quadrilateral.

    Returns the determinant of the three unit line vectors, which vanishes
    exactly when the lines share a (possibly infinite) point.
    """
    if config.n != 4:
        raise ValueError("the Desargues form applies to quadrilaterals")
    A, B = config.A, config.B
    lines = [
        np.cross(B[0].h, B[2].h),
        np.cross(np.append(A[1], 1.0), np.append(A[2], 1.0)),
        np.cross(np.append(A[3], 1.0), np.append(A[0], 1.0)),
    ]
    lines = [l / np.linalg.norm(l) for l in lines]
    return float(abs(np.linalg.det(np.array(lines))))


def geometric_condition_I(config, rtol=INCIDENCE_RTOL):
    """The chain ends at ``A[n-1]``: ``P[n-2]`` coincides with it."""
    n = config.n
    chain = witness_chain(config, n - 2)
    end = ProjectivePoint2(np.array([*config.A[-1], 1.0]))
    gap = _distance(chain.P[-1], end)
    des = desargues_residual(config) if n == 4 else None
    return ConditionResult(gap <= rtol * config.diameter, gap, chain, des)


def geometric_condition_II(config, rtol=INCIDENCE_RTOL):
    """``P[n-3]``, ``A[n-2]`` and ``A[n-1]`` are collinear."""
    n = config.n
    chain = witness_chain(config, n - 3)
    res = _collinearity(chain.P[-1], config.A[-2], config.A[-1])
    return ConditionResult(res <= rtol * config.diameter, res, chain)


@dataclass(frozen=True)
class IncidenceVerdict:
    flexible: bool
    condition: str  # "I" or "II"
    result: ConditionResult
    product: float
    chi: float
    chi_flexible: bool

    @property
    def agrees(self):
        return self.flexible == self.chi_flexible


def flexibility_via_incidence(mesh, rtol=INCIDENCE_RTOL, chi_tol=1e-8, tol=DEFAULT_TOL):
    """Decide infinitesimal flexibility from the traces alone.

    Even ``n`` uses condition I and odd ``n`` condition II; the verdict is
    reported next to the direct test ``|chi - 1| <= chi_tol``.
    """
    config = build_trace_configuration(mesh, tol)
    if config.n % 2 == 0:
        name, result = "I", geometric_condition_I(config, rtol)
    else:
        name, result = "II", geometric_condition_II(config, rtol)
    x = chi_value(mesh).value
    try:
        product = ceva_menelaus_product(config)
    except (UnsupportedInfinityPattern, InfiniteEndpoint, ZeroDivisionError):
        product = float("nan")
    return IncidenceVerdict(result.holds, name, result, product, x, abs(x - 1.0) <= chi_tol)


def witness_csv(config, chain):
    """Labelled 2D points ``label,x,y`` (infinite points get ``inf`` coordinates)."""
    rows = ["label,x,y"]

    def add(label, p):
        if isinstance(p, ProjectivePoint2):
            if p.at_infinity:
                rows.append(f"{label},inf,inf")
                return
            p = p.affine()
        rows.append(f"{label},{float(p[0])!r},{float(p[1])!r}")

    for i, p in enumerate(config.A):
        add(f"A{i + 1}", p)
    for i, p in enumerate(config.B):
        add(f"B{i + 1}", p)
    for k, p in enumerate(chain.O, start=1):
        add(f"O{k}", p)
    for k, p in enumerate(chain.P):
        add(f"P{k}", p)
    out = io.StringIO()
    out.write("\n".join(rows) + "\n")
    return out.getvalue()
