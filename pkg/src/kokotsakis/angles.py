"""Angle-space flexibility test for (3x3)-meshes.

Each vertex ties the cosines of its two adjacent dihedrals by a
biquadratic relation whose nine coefficients depend only on the face
angles.  Eliminating the dihedral cosines ``t2`` and ``t4`` leaves two
polynomials ``f1(t1, t3)``, ``f2(t1, t3)``; the mesh flexes exactly when
their resultant in ``t3`` vanishes identically in ``t1``, which is checked
on the integer samples ``t1 = -50..50``.

Index convention: vertex ``k`` (0-based) couples ``t[k-1]`` and ``t[k]``,
where ``t[k]`` is the cosine of the dihedral along ``A[k]A[k+1]``.  The
names ``t1..t4`` and ``C1..C4`` below are 1-based to match that chain:
``t1 = t[0]`` and row ``C1`` belongs to vertex 0.
"""
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from .errors import (
    EliminationSingular,
    InfeasibleParameters,
    LengthError,
    NoRealRealization,
    NormalizationFallback,
    ParseError,
    SchemaVersionMismatch,
)
from .mesh import AngleSet, KokotsakisMesh, parse_json
from .polynomials import BivarPoly, resultant, trim

THRESHOLD = 1e-6
SAMPLES = tuple(range(-50, 51))
MIN_VALID = 95
NORMALIZATION_POWER = 4
NORMALIZATION_RTOL = 1e-12


# ------------------------------------------------------------ vertex relation


def r_residual(alpha, beta, gamma, phi, omega_prev, omega_cur):
    """Left side minus ``cos(gamma)`` of the vertex relation.

    ``omega_prev``/``omega_cur`` are the signed dihedrals on the edges before
    and after the vertex (see `AngleSet.signed_omega`).
    """
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cp, sp = math.cos(phi), math.sin(phi)
    tp, sp_ = math.cos(omega_prev), math.sin(omega_prev)
    tc, sc = math.cos(omega_cur), math.sin(omega_cur)
    lhs = (
        ca * cb * cp
        + sa * sb * cp * tp
        + sa * cb * sp * tc
        - ca * sb * sp * tp * tc
        + sb * sp * sp_ * sc
    )
    return lhs - math.cos(gamma)


@dataclass(frozen=True)
class Trig:
    """Cosine and sine of one angle; floats or exact fractions."""

    cos: object
    sin: object

    @classmethod
    def of(cls, angle):
        return cls(math.cos(angle), math.sin(angle))

    @classmethod
    def from_half_tangent(cls, s):
        """Rational point on the circle: ``s = tan(angle / 2)``."""
        s = Fraction(s)
        d = 1 + s * s
        return cls((1 - s * s) / d, 2 * s / d)

    @property
    def angle(self):
        return math.atan2(float(self.sin), float(self.cos))

    def half_tangent(self):
        """``tan(angle / 2) = sin / (1 + cos)``; exact for rational input."""
        return self.sin / (1 + self.cos)


def c_coefficients_trig(a, b, g, p):
    """The nine coefficients from `Trig` values of alpha, beta, gamma, phi."""
    ca, sa = a.cos, a.sin
    cb, sb = b.cos, b.sin
    cg = g.cos
    cp, sp = p.cos, p.sin
    d = ca * cb * cp - cg
    return [
        d * d - sb * sb * sp * sp,
        2 * d * sa * sb * cp,
        2 * d * sa * cb * sp,
        sa * sa * sb * sb * cp * cp + sb * sb * sp * sp,
        2 * (cb * cp - 2 * ca * ca * cb * cp + ca * cg) * sb * sp,
        sa * sa * cb * cb * sp * sp + sb * sb * sp * sp,
        -2 * sa * ca * sb * sb * sp * cp,
        -2 * sa * ca * sb * cb * sp * sp,
        -sa * sa * sb * sb * sp * sp,
    ]


def c_coefficients(alpha, beta, gamma, phi):
    """Coefficients ``C[0..8]`` of the squared vertex relation.

    The relation reads ``sum_k C[k] * m_k(t_prev, t_cur) = 0`` for the
    monomials ``1, tp, tc, tp^2, tp tc, tc^2, tp^2 tc, tp tc^2, tp^2 tc^2``.
    """
    return np.array(c_coefficients_trig(*(Trig.of(x) for x in (alpha, beta, gamma, phi))), dtype=float)


def rbar_residual(C, t_prev, t_cur):
    tp, tc = t_prev, t_cur
    return (
        C[0]
        + C[1] * tp
        + C[2] * tc
        + C[3] * tp * tp
        + C[4] * tp * tc
        + C[5] * tc * tc
        + C[6] * tp * tp * tc
        + C[7] * tp * tc * tc
        + C[8] * tp * tp * tc * tc
    )


@dataclass(frozen=True)
class CornerCoefficients:
    """Coefficient rows ``C[k]`` (length 9) for the four vertices."""

    rows: np.ndarray

    @property
    def exact(self):
        return self.rows.dtype == object

    def __getitem__(self, k):
        return self.rows[k]

    @classmethod
    def from_angles(cls, angles):
        if isinstance(angles, ExactAngles):
            rows = np.empty((angles.n, 9), dtype=object)
            for k in range(angles.n):
                rows[k] = c_coefficients_trig(*angles.vertex(k))
            return cls(rows)
        if angles.n != 4:
            raise ValueError("angle-space elimination needs a quadrangle (n = 4)")
        return cls(np.array([c_coefficients(*angles.vertex(k)) for k in range(4)]))


# ---------------------------------------------------------- exact angle sets


@dataclass(frozen=True)
class ExactAngles:
    """Face angles given by rational cosines and sines."""

    alpha: tuple
    beta: tuple
    gamma: tuple
    phi: tuple

    @property
    def n(self):
        return len(self.alpha)

    def vertex(self, k):
        return self.alpha[k], self.beta[k], self.gamma[k], self.phi[k]

    def to_angle_set(self):
        conv = lambda xs: np.array([x.angle for x in xs])
        return AngleSet(conv(self.alpha), conv(self.beta), conv(self.gamma), conv(self.phi))


def _tan_half_sum(ts):
    acc = Fraction(0)
    for t in ts:
        acc = (acc + t) / (1 - acc * t)
    return acc


# An isogonal vertex (gamma = alpha, phi = beta) ties the half-angle tangents
# x of its two dihedrals by x_prev * x_cur = k, with k one of two branch
# values.  Around the quadrangle the chain closes for every starting dihedral
# exactly when k1 * k3 = k2 * k4.


def isogonal_factor(a, b, branch):
    """Branch value ``k`` from the half tangents ``a = tan(alpha/2)``, ``b = tan(beta/2)``."""
    if branch > 0:
        return (1 + a * b) / (1 - a * b)
    return (b - a) / (b + a)


def _solve_last_beta(a, k_target, branch):
    """Half tangent ``b`` with ``isogonal_factor(a, b, branch) == k_target``."""
    if branch > 0:
        return (k_target - 1) / ((k_target + 1) * a)
    return a * (1 + k_target) / (1 - k_target)


def voss_closure_target(alpha_tan, beta_tan, branches):
    """The value ``k4`` must take for the first three vertices to close up."""
    k = [isogonal_factor(alpha_tan[i], beta_tan[i], branches[i]) for i in range(3)]
    return k[0] * k[2] / k[1]


def voss_closure_mismatch(alpha, beta):
    """Smallest ``|k1 k3 - k2 k4|`` over branch choices (float angles)."""
    a = [math.tan(x / 2) for x in alpha]
    b = [math.tan(x / 2) for x in beta]
    best = math.inf
    for signs in _all_branches():
        try:
            k = [isogonal_factor(a[i], b[i], signs[i]) for i in range(4)]
        except ZeroDivisionError:
            continue
        scale = max(1.0, abs(k[0] * k[2]), abs(k[1] * k[3]))
        best = min(best, abs(k[0] * k[2] - k[1] * k[3]) / scale)
    return best


def _all_branches():
    return [tuple(1 if (m >> i) & 1 else -1 for i in range(4)) for m in range(16)]


def exact_voss_angles(alpha_tangents, beta_tangents, branches=(1, 1, 1, 1)):
    """Voss angle set with rational half-angle tangents.

    ``alpha_tangents`` gives three of the four middle-face angles; the last
    is fixed by the angle sum ``2 pi`` and stays rational.  With three
    ``beta_tangents`` the fourth is solved from the closure condition on the
    chosen ``branches``; with four they are used as given.
    """
    s = [Fraction(x) for x in alpha_tangents]
    b = [Fraction(x) for x in beta_tangents]
    if len(s) != 3 or len(b) not in (3, 4):
        raise InfeasibleParameters("need 3 alpha tangents and 3 or 4 beta tangents")
    # alpha4 / 2 = pi - (alpha1 + alpha2 + alpha3) / 2
    try:
        last = -_tan_half_sum(s)
    except ZeroDivisionError:
        raise InfeasibleParameters("the fourth middle-face angle would be pi") from None
    if any(x <= 0 for x in s + [last]):
        raise InfeasibleParameters("middle-face angles must lie in (0, pi) and sum to 2 pi")
    s.append(last)
    if len(b) == 3:
        try:
            target = voss_closure_target(s, b, branches)
            b.append(_solve_last_beta(s[3], target, branches[3]))
        except ZeroDivisionError:
            raise InfeasibleParameters("closure condition has no finite solution") from None
    if any(x <= 0 for x in b):
        raise InfeasibleParameters("beta angles must lie in (0, pi)")
    alpha = tuple(Trig.from_half_tangent(x) for x in s)
    beta = tuple(Trig.from_half_tangent(x) for x in b)
    return ExactAngles(alpha, beta, alpha, beta)


def random_exact_voss(rng, denominator=10, tries=1000):
    """Seeded Pythagorean Voss draw (small rational half tangents)."""
    for _ in range(tries):
        s = [Fraction(int(rng.integers(7, 13)), denominator) for _ in range(3)]
        b = [Fraction(int(rng.integers(3, 30)), denominator) for _ in range(3)]
        branches = tuple(int(x) for x in rng.choice([-1, 1], 4))
        try:
            angles = exact_voss_angles(s, b, branches)
        except InfeasibleParameters:
            continue
        if all(0.2 < x.angle < math.pi - 0.2 for x in angles.beta):
            return angles
    raise InfeasibleParameters("no feasible rational Voss draw found")


def _rational_tangent(rng, lo=2, hi=50, denominator=10):
    return Fraction(int(rng.integers(lo, hi)), denominator)


def random_exact_family(kind, rng, base="voss", flips=None):
    """Seeded draw on a flexible family with rational half-angle tangents.

    The exact counterpart of `family_angles`: every cosine and sine is a
    fraction, so the certificate can be computed without rounding.
    """
    if kind == "voss":
        return random_exact_voss(rng)
    if kind in ("symmetric_12_43", "symmetric_14_23"):
        s = Fraction(int(rng.integers(7, 14)), 10)
        # the two free middle-face angles sum to pi: tangents s and 1/s
        pair = [Trig.from_half_tangent(s), Trig.from_half_tangent(1 / s)]
        b, g, p = ([Trig.from_half_tangent(_rational_tangent(rng)) for _ in range(2)] for _ in range(3))
        if kind == "symmetric_12_43":
            return ExactAngles(
                (pair[0], pair[1], pair[1], pair[0]),
                (b[0], b[1], p[1], p[0]),
                (g[0], g[1], g[1], g[0]),
                (p[0], p[1], b[1], b[0]),
            )
        return ExactAngles(
            (pair[0], pair[0], pair[1], pair[1]),
            (b[0], p[0], p[1], b[1]),
            (g[0], g[0], g[1], g[1]),
            (p[0], b[0], b[1], p[1]),
        )
    if kind == "sign_flip":
        if base == "sign_flip" or base not in FAMILIES:
            raise InfeasibleParameters(f"bad base family {base!r}")
        flips = edge_face_flips(4) if flips is None else tuple(flips)
        return flip_wings(random_exact_family(base, rng), flips)
    raise InfeasibleParameters(f"unknown family {kind!r}")


_SYMMETRIC_PAIRS = {
    # (vertex, mirror vertex), 0-based; beta and phi swap under the mirror
    "symmetric_12_43": ((0, 3), (1, 2)),
    "symmetric_14_23": ((0, 1), (3, 2)),
}


def family_relations(kind, base="voss", flips=None):
    """Angle equalities defining a family, as ``(terms, rhs)`` pairs.

    ``terms`` is a list of ``(sign, name, index)`` and the relation reads
    ``sum sign * angle == rhs`` with ``rhs`` a multiple of ``pi``.
    """
    if kind == "sign_flip":
        flips = edge_face_flips(4) if flips is None else tuple(flips)
        parity = {}
        for label in flips:
            kind_, i = _parse_flip(label, 4)
            for name in (("beta" if kind_ == "v" else "phi"), "gamma"):
                parity[(name, i)] = parity.get((name, i), 0) ^ 1
        out = []
        for terms, rhs in family_relations(base):
            new_terms, new_rhs = [], rhs
            for sign, name, i in terms:
                if parity.get((name, i)):
                    # base angle x = pi - x'
                    new_terms.append((-sign, name, i))
                    new_rhs -= sign * np.pi
                else:
                    new_terms.append((sign, name, i))
            if new_terms[0][0] < 0:
                new_terms = [(-s, n, i) for s, n, i in new_terms]
                new_rhs = -new_rhs
            out.append((new_terms, new_rhs))
        return out
    if kind == "voss":
        out = []
        for i in range(4):
            out.append(([(1, "alpha", i), (-1, "gamma", i)], 0.0))
            out.append(([(1, "beta", i), (-1, "phi", i)], 0.0))
        return out
    if kind in _SYMMETRIC_PAIRS:
        out = []
        for i, j in _SYMMETRIC_PAIRS[kind]:
            for x, y in (("alpha", "alpha"), ("beta", "phi"), ("gamma", "gamma"), ("phi", "beta")):
                out.append(([(1, x, i), (-1, y, j)], 0.0))
        return out
    raise InfeasibleParameters(f"unknown family {kind!r}")


def format_relation(terms, rhs):
    text = ""
    for k, (sign, name, i) in enumerate(terms):
        op = ("-" if sign < 0 else "") if k == 0 else (" - " if sign < 0 else " + ")
        text += f"{op}{name}{i + 1}"
    if abs(rhs) < 1e-12 and len(terms) == 2 and terms[1][0] < 0:
        first = terms[0]
        return f"{first[1]}{first[2] + 1} = {terms[1][1]}{terms[1][2] + 1}"
    k = round(rhs / np.pi)
    right = "0" if k == 0 else ("pi" if k == 1 else ("-pi" if k == -1 else f"{k} pi"))
    return f"{text} = {right}"


def relation_residuals(angles, relations):
    """``{label: |lhs - rhs|}`` for each relation on a float angle set."""
    out = {}
    for terms, rhs in relations:
        lhs = sum(sign * float(getattr(angles, name)[i]) for sign, name, i in terms)
        out[format_relation(terms, rhs)] = abs(lhs - rhs)
    return out


# ---------------------------------------------------------- angle documents

ANGLES_SCHEMA = "kokotsakis-angles/1"
_ANGLE_KEYS = ("alpha", "beta", "gamma", "phi")


@dataclass(frozen=True)
class AngleDocument:
    angles: AngleSet
    exact: ExactAngles | None = None
    meta: dict = field(default_factory=dict)


def angles_to_document(angles, meta=None):
    """JSON-ready dict; exact input also records its half-angle tangents."""
    if isinstance(angles, ExactAngles):
        floats = angles.to_angle_set()
        doc = {"schema": ANGLES_SCHEMA}
        doc.update({k: getattr(floats, k).tolist() for k in _ANGLE_KEYS})
        doc["half_tangents"] = {
            k: [str(x.half_tangent()) for x in getattr(angles, k)] for k in _ANGLE_KEYS
        }
    else:
        doc = {"schema": ANGLES_SCHEMA}
        doc.update({k: np.asarray(getattr(angles, k), dtype=float).tolist() for k in _ANGLE_KEYS})
    if meta:
        doc["meta"] = dict(meta)
    return doc


def save_angles(angles, meta=None):
    import json

    return (json.dumps(angles_to_document(angles, meta), indent=1) + "\n").encode("utf-8")


def _angle_list(doc, key, n=None):
    values = doc.get(key)
    if not isinstance(values, list):
        raise ParseError("angle array missing or not a list", field=key)
    if n is not None and len(values) != n:
        raise LengthError(f"field {key!r} has {len(values)} entries, expected {n}")
    for i, x in enumerate(values):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ParseError("angle is not a number", field=f"{key}[{i}]")
    return np.array(values, dtype=float)


def angles_from_document(doc):
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    if doc.get("schema") != ANGLES_SCHEMA:
        raise SchemaVersionMismatch(f"expected schema {ANGLES_SCHEMA!r}, got {doc.get('schema')!r}")
    alpha = _angle_list(doc, "alpha")
    if len(alpha) < 3:
        raise LengthError("an angle set needs at least three vertices")
    arrays = {k: _angle_list(doc, k, len(alpha)) for k in _ANGLE_KEYS}
    angles = AngleSet(*(arrays[k] for k in _ANGLE_KEYS))
    exact = None
    if "half_tangents" in doc:
        ht = doc["half_tangents"]
        if not isinstance(ht, dict):
            raise ParseError("half_tangents must be an object", field="half_tangents")
        trig = {}
        for k in _ANGLE_KEYS:
            entries = ht.get(k)
            if not isinstance(entries, list) or len(entries) != len(alpha):
                raise ParseError("half-tangent list missing or of wrong length", field=f"half_tangents.{k}")
            try:
                trig[k] = tuple(Trig.from_half_tangent(Fraction(str(x))) for x in entries)
            except (ValueError, ZeroDivisionError) as exc:
                raise ParseError(f"bad rational: {exc}", field=f"half_tangents.{k}") from None
            for i, t in enumerate(trig[k]):
                if abs(t.angle - arrays[k][i]) > 1e-9:
                    raise ParseError("half tangent disagrees with the angle", field=f"half_tangents.{k}[{i}]")
        exact = ExactAngles(*(trig[k] for k in _ANGLE_KEYS))
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise ParseError("meta must be an object", field="meta")
    return AngleDocument(angles, exact, meta)


def load_angles(data):
    """Parse an angles document (``bytes`` or ``str``) into an `AngleDocument`."""
    return angles_from_document(parse_json(data))


# ------------------------------------------------------------- elimination


def _quad(c0, c1, c2, var, exact):
    """``c0 + c1*var + c2*var^2`` as a BivarPoly in ``x = t1`` or ``y = t3``."""
    coeffs = np.array([c0, c1, c2], dtype=object if exact else float)
    return BivarPoly.from_x(coeffs) if var == "x" else BivarPoly.from_y(coeffs)


def _pieces(C):
    """Quadratic blocks of the four relations, keyed as in the elimination."""
    C1, C2, C3, C4 = C[0], C[1], C[2], C[3]
    ex = C.exact
    q = lambda row, i, j, k, var: _quad(row[i], row[j], row[k], var, ex)
    # relation 2 in powers of t2, coefficients in t1
    a0, a1, a2 = q(C2, 0, 1, 3, "x"), q(C2, 2, 4, 6, "x"), q(C2, 5, 7, 8, "x")
    # relation 3 in powers of t2, coefficients in t3
    b0, b1, b2 = q(C3, 0, 2, 5, "y"), q(C3, 1, 4, 7, "y"), q(C3, 3, 6, 8, "y")
    # relation 1 in powers of t4, coefficients in t1
    c0, c1, c2 = q(C1, 0, 2, 5, "x"), q(C1, 1, 4, 7, "x"), q(C1, 3, 6, 8, "x")
    # relation 4 in powers of t4, coefficients in t3
    d0, d1, d2 = q(C4, 0, 1, 3, "y"), q(C4, 2, 4, 6, "y"), q(C4, 5, 7, 8, "y")
    return (a0, a1, a2), (b0, b1, b2), (c0, c1, c2), (d0, d1, d2)


def elimination_polys(C):
    """Numerators and denominators ``(tn2, td2, tn4, td4)`` of ``t2``, ``t4``."""
    (a0, a1, a2), (b0, b1, b2), (c0, c1, c2), (d0, d1, d2) = _pieces(C)
    tn2 = -(a2 * b0 - b2 * a0)
    td2 = a2 * b1 - b2 * a1
    tn4 = -(c2 * d0 - d2 * c0)
    td4 = c2 * d1 - d2 * c1
    return tn2, td2, tn4, td4


def eliminate_t2_t4(C, t1, t3, tol=1e-12):
    """Dihedral cosines ``(t2, t4)`` implied by ``(t1, t3)``."""
    if not isinstance(C, CornerCoefficients):
        C = CornerCoefficients(np.asarray(C))
    tn2, td2, tn4, td4 = elimination_polys(C)
    den2, den4 = td2(t1, t3), td4(t1, t3)
    ref = max(1.0, td2.norm(), td4.norm())
    for name, d in (("t2", den2), ("t4", den4)):
        if (d == 0) if C.exact else abs(d) <= tol * ref:
            raise EliminationSingular(f"denominator of {name} vanishes at t1={t1}, t3={t3}")
    return tn2(t1, t3) / den2, tn4(t1, t3) / den4


def build_f1_f2(C):
    """The two eliminated polynomials ``f1(t1, t3)`` and ``f2(t1, t3)``."""
    if not isinstance(C, CornerCoefficients):
        C = CornerCoefficients(np.asarray(C))
    (a0, a1, a2), _, (c0, c1, c2), _ = _pieces(C)
    tn2, td2, tn4, td4 = elimination_polys(C)
    f1 = c0 * td4 * td4 + c1 * td4 * tn4 + c2 * tn4 * tn4
    f2 = a0 * td2 * td2 + a1 * td2 * tn2 + a2 * tn2 * tn2
    return f1, f2


def composed_f1_f2(C, t1, t3):
    """Evaluate ``f1``, ``f2`` at a point without expanding any products."""
    C1, C2, C3, C4 = (np.asarray(C[k]) for k in range(4))
    a0 = C2[0] + C2[1] * t1 + C2[3] * t1**2
    a1 = C2[2] + C2[4] * t1 + C2[6] * t1**2
    a2 = C2[5] + C2[7] * t1 + C2[8] * t1**2
    b0 = C3[0] + C3[2] * t3 + C3[5] * t3**2
    b1 = C3[1] + C3[4] * t3 + C3[7] * t3**2
    b2 = C3[3] + C3[6] * t3 + C3[8] * t3**2
    c0 = C1[0] + C1[2] * t1 + C1[5] * t1**2
    c1 = C1[1] + C1[4] * t1 + C1[7] * t1**2
    c2 = C1[3] + C1[6] * t1 + C1[8] * t1**2
    d0 = C4[0] + C4[1] * t3 + C4[3] * t3**2
    d1 = C4[2] + C4[4] * t3 + C4[6] * t3**2
    d2 = C4[5] + C4[7] * t3 + C4[8] * t3**2
    tn2, td2 = -(a2 * b0 - b2 * a0), a2 * b1 - b2 * a1
    tn4, td4 = -(c2 * d0 - d2 * c0), c2 * d1 - d2 * c1
    f1 = c0 * td4**2 + c1 * td4 * tn4 + c2 * tn4**2
    f2 = a0 * td2**2 + a1 * td2 * tn2 + a2 * tn2**2
    return f1, f2


# ------------------------------------------------------------ certificate


@dataclass
class FlexCertificate:
    samples: list
    values: list  # normalized resultant per sample; None when excluded
    normalizations: list  # (coefficient index of f1, of f2) per sample
    fallbacks: list  # samples where the t3^4 coefficient could not be used
    excluded: list  # (sample, reason)
    verdict: str  # "flexible" | "rigid" | "degenerate"
    threshold: float
    exact: bool = False
    min_valid: int = MIN_VALID

    @property
    def valid_values(self):
        return [v for v in self.values if v is not None]

    @property
    def max_value(self):
        vals = self.valid_values
        return max(abs(float(v)) for v in vals) if vals else float("nan")

    @property
    def flexible(self):
        return self.verdict == "flexible"

    def to_dict(self):
        return {
            "schema": "kokotsakis-certificate/1",
            "verdict": self.verdict,
            "exact": self.exact,
            "threshold": self.threshold,
            "min_valid": self.min_valid,
            "max_normalized_resultant": self.max_value,
            "samples": [
                {
                    "t1": m,
                    "value": None if v is None else float(v),
                    "normalization": list(nrm) if nrm is not None else None,
                }
                for m, v, nrm in zip(self.samples, self.values, self.normalizations)
            ],
            "fallbacks": list(self.fallbacks),
            "excluded": [{"t1": m, "reason": r} for m, r in self.excluded],
        }


def _normalize(g, exact):
    """Divide by the ``t3^4`` coefficient, or by the largest one if it vanishes."""
    mags = np.abs(g.astype(float)) if exact else np.abs(g)
    k = NORMALIZATION_POWER
    big = mags.max()
    usable = k < len(g) and (g[k] != 0 if exact else mags[k] > NORMALIZATION_RTOL * big)
    if not usable:
        k = int(np.argmax(mags))
    return g / g[k], k, k != NORMALIZATION_POWER


def resultant_in_t3(g1, g2):
    """Resultant of two polynomials in ``t3`` (ascending coefficients)."""
    return resultant(g1, g2)


def flex_certificate(angles, samples=SAMPLES, threshold=THRESHOLD, min_valid=MIN_VALID):
    """Sample the resultant ``p(t1)`` at integer points and decide flexibility.

    ``angles`` is an `AngleSet` (floating point, threshold verdict) or an
    `ExactAngles` (rational arithmetic, verdict requires exact zeros).
    """
    C = CornerCoefficients.from_angles(angles)
    exact = C.exact
    f1, f2 = build_f1_f2(C)
    _, td2, _, td4 = elimination_polys(C)
    samples = list(samples)
    min_valid = min(min_valid, len(samples))
    values, norms, fallbacks, excluded = [], [], [], []
    ref = {id(p): p.norm() for p in (f1, f2, td2, td4)}
    for m in samples:
        x = Fraction(m) if exact else float(m)
        reason = None
        for name, p in (("t2", td2), ("t4", td4)):
            sliced = p.in_y_at(x)
            if (not np.any(sliced != 0)) if exact else np.abs(sliced).max() <= 1e-12 * max(ref[id(p)], 1e-300):
                reason = f"elimination of {name} singular"
        g = []
        for p in (f1, f2):
            sliced = p.in_y_at(x)
            sliced = trim(sliced) if exact else trim(sliced, 1e-13)
            if len(sliced) == 0:
                reason = reason or "specialized polynomial vanishes"
            g.append(sliced)
        if reason is not None:
            values.append(None)
            norms.append(None)
            excluded.append((m, reason))
            continue
        (g1, k1, fb1), (g2, k2, fb2) = (_normalize(gi, exact) for gi in g)
        if fb1 or fb2:
            fallbacks.append(m)
        norms.append((k1, k2))
        values.append(resultant_in_t3(g1, g2))
    if fallbacks:
        warnings.warn(
            f"t3^{NORMALIZATION_POWER} coefficient vanished at {len(fallbacks)} samples; "
            "normalized by the largest coefficient instead",
            NormalizationFallback,
            stacklevel=2,
        )
    valid = [v for v in values if v is not None]
    if len(valid) < min_valid:
        verdict = "degenerate"
    elif exact:
        verdict = "flexible" if all(v == 0 for v in valid) else "rigid"
    else:
        verdict = "flexible" if all(abs(v) <= threshold for v in valid) else "rigid"
    return FlexCertificate(samples, values, norms, fallbacks, excluded, verdict, threshold, exact, min_valid)


# ---------------------------------------------------------------- families

FAMILIES = ("voss", "symmetric_12_43", "symmetric_14_23", "sign_flip")


def _check_open(name, values):
    values = np.asarray(values, dtype=float)
    if not ((values > 0) & (values < np.pi)).all():
        raise InfeasibleParameters(f"{name} must lie strictly inside (0, pi)")


def random_quad_angles(rng, spread=0.45):
    """Four angles in ``(0, pi)`` summing to ``2 pi`` (a convex quadrangle)."""
    while True:
        alpha = np.pi / 2 + rng.uniform(-spread, spread, 3)
        last = 2 * np.pi - alpha.sum()
        if 0.3 < last < np.pi - 0.3:
            return np.append(alpha, last)


def _draw(rng, k, lo=0.35, hi=np.pi - 0.35):
    return rng.uniform(lo, hi, k)


def _parse_flip(label, n):
    kind, i = label[:1], label[1:]
    if kind not in ("v", "w") or not i.isdigit() or not 1 <= int(i) <= n:
        raise InfeasibleParameters(f"bad flip label {label!r}")
    return kind, int(i) - 1


def _supplement(x):
    if isinstance(x, Trig):
        return Trig(-x.cos, x.sin)
    return np.pi - x


def flip_wings(angles, flips):
    """Angle set of the mesh with some wing vectors reversed.

    ``flips`` holds labels ``"v1"``..``"w4"`` (1-based).  Reversing ``v_i``
    maps ``beta_i -> pi - beta_i``, ``gamma_i -> pi - gamma_i``; reversing
    ``w_i`` maps ``phi_i -> pi - phi_i``, ``gamma_i -> pi - gamma_i``.
    Works on `AngleSet` and on `ExactAngles`.

    Only flips made of whole edge faces (see `edge_face_flips`) keep a
    flexible angle set flexible: reversing both wings of the face on edge
    ``i`` is the substitution ``t_i -> -t_i`` in every vertex relation.
    """
    beta, gamma, phi = (list(x) for x in (angles.beta, angles.gamma, angles.phi))
    for label in flips:
        kind, i = _parse_flip(label, angles.n)
        if kind == "v":
            beta[i] = _supplement(beta[i])
        else:
            phi[i] = _supplement(phi[i])
        gamma[i] = _supplement(gamma[i])
    if isinstance(angles, ExactAngles):
        return ExactAngles(angles.alpha, tuple(beta), tuple(gamma), tuple(phi))
    return AngleSet(angles.alpha, beta, gamma, phi)


def edge_face_flips(*edges, n=4):
    """Flip labels reversing the whole edge face on each 1-based edge ``i``.

    The face on edge ``A_i A_{i+1}`` carries ``w_i`` and ``v_{i+1}``.
    """
    labels = []
    for i in edges:
        if not 1 <= i <= n:
            raise InfeasibleParameters(f"edge {i} out of range 1..{n}")
        labels += [f"w{i}", f"v{i % n + 1}"]
    return tuple(labels)


def is_edge_face_flip(flips, n=4):
    """True when ``flips`` reverses whole edge faces only."""
    chosen = {_parse_flip(label, n) for label in flips}
    return all((("v", (i + 1) % n) in chosen) == (("w", i) in chosen) for i in range(n))


VOSS_BETA_RANGE = (0.2, np.pi - 0.2)
_K_RANGE = (1e-3, 1e3)


def _voss_angles(params, rng):
    if "alpha" in params:
        alpha = np.asarray(params["alpha"], dtype=float)
        _check_open("alpha", alpha)
        if len(alpha) != 4 or abs(alpha.sum() - 2 * np.pi) > 1e-9:
            raise InfeasibleParameters("need four middle-face angles summing to 2 pi")
    else:
        alpha = None
    if "beta" in params:
        beta = np.asarray(params["beta"], dtype=float)
        _check_open("beta", beta)
        if alpha is None:
            raise InfeasibleParameters("fixing beta requires fixing alpha as well")
        if len(beta) == 4:
            if voss_closure_mismatch(alpha, beta) > 1e-9:
                raise InfeasibleParameters("Voss angles do not satisfy the closure condition k1 k3 = k2 k4")
            return AngleSet(alpha, beta, alpha.copy(), beta.copy())
        if len(beta) != 3:
            raise InfeasibleParameters("beta needs 3 entries (the fourth is solved) or 4")
    branches = params.get("branches")
    for _ in range(10000):
        al = alpha if alpha is not None else random_quad_angles(rng)
        be = beta if "beta" in params else _draw(rng, 3)
        br = tuple(branches) if branches is not None else tuple(int(x) for x in rng.choice([-1, 1], 4))
        a = [math.tan(x / 2) for x in al]
        b = [math.tan(x / 2) for x in be]
        k = [isogonal_factor(a[i], b[i], br[i]) for i in range(3)]
        if not all(_K_RANGE[0] < abs(x) < _K_RANGE[1] for x in k):
            b4 = -1.0
        else:
            b4 = _solve_last_beta(a[3], k[0] * k[2] / k[1], br[3])
        if b4 > 0 and VOSS_BETA_RANGE[0] < 2 * math.atan(b4) < VOSS_BETA_RANGE[1]:
            full = np.append(be, 2 * math.atan(b4))
            return AngleSet(al, full, al.copy(), full.copy())
        if alpha is not None and "beta" in params and branches is not None:
            break
    raise InfeasibleParameters("no admissible fourth beta closes the Voss chain for these parameters")


def family_angles(kind, params=None, rng=None, base="voss", flips=None):
    """Angle set on one of the known flexible families.

    ``params`` fixes the free parameters (a dict); missing entries are drawn
    from ``rng``.  Free parameters per family:

    * ``voss``: ``alpha`` (4, summing to 2 pi), ``beta`` (3 or 4),
      ``branches`` (4 signs); then ``gamma = alpha``, ``phi = beta``.  The
      fourth ``beta`` is solved so the isogonal vertex relations close up.
    * ``symmetric_12_43``: ``alpha12`` (2, summing to pi), ``beta12``,
      ``gamma12``, ``phi12``; vertices 4 and 3 mirror vertices 1 and 2.
    * ``symmetric_14_23``: ``alpha14`` (2, summing to pi), ``beta14``,
      ``gamma14``, ``phi14``; vertices 2 and 3 mirror vertices 1 and 4.
    * ``sign_flip``: a draw from ``base`` with the wings in ``flips``
      reversed; by default the edge face on edge 4 (``w4`` and ``v1``).
    """
    params = dict(params or {})
    rng = rng if rng is not None else np.random.default_rng()
    get = lambda key, k: np.asarray(params[key], dtype=float) if key in params else _draw(rng, k)
    if kind == "voss":
        return _voss_angles(params, rng)
    if kind in ("symmetric_12_43", "symmetric_14_23"):
        key = "12" if kind == "symmetric_12_43" else "14"
        if f"alpha{key}" in params:
            pair = np.asarray(params[f"alpha{key}"], dtype=float)
        else:
            first = rng.uniform(np.pi / 2 - 0.5, np.pi / 2 + 0.5)
            pair = np.array([first, np.pi - first])
        if abs(pair.sum() - np.pi) > 1e-9:
            raise InfeasibleParameters("the two free middle-face angles must sum to pi")
        b, g, p = get(f"beta{key}", 2), get(f"gamma{key}", 2), get(f"phi{key}", 2)
        for name, x in (("alpha", pair), ("beta", b), ("gamma", g), ("phi", p)):
            _check_open(name, x)
        if kind == "symmetric_12_43":
            # vertex 1 <-> 4 and 2 <-> 3; the mirror swaps beta and phi
            alpha = [pair[0], pair[1], pair[1], pair[0]]
            beta = [b[0], b[1], p[1], p[0]]
            gamma = [g[0], g[1], g[1], g[0]]
            phi = [p[0], p[1], b[1], b[0]]
        else:
            # vertex 1 <-> 2 and 4 <-> 3; free data at vertices 1 and 4
            alpha = [pair[0], pair[0], pair[1], pair[1]]
            beta = [b[0], p[0], p[1], b[1]]
            gamma = [g[0], g[0], g[1], g[1]]
            phi = [p[0], b[0], b[1], p[1]]
        return AngleSet(alpha, beta, gamma, phi)
    if kind == "sign_flip":
        if base == "sign_flip" or base not in FAMILIES:
            raise InfeasibleParameters(f"bad base family {base!r}")
        flips = edge_face_flips(4) if flips is None else tuple(flips)
        return flip_wings(family_angles(base, params, rng), flips)
    raise InfeasibleParameters(f"unknown family {kind!r}")


# -------------------------------------------------------------- realization


def quad_from_angles(alpha, lengths=None):
    """Planar polygon with interior angles ``alpha``, counterclockwise in z = 0.

    Without ``lengths`` the edge lengths closest to all-ones that close the
    polygon are used.
    """
    alpha = np.asarray(alpha, dtype=float)
    n = len(alpha)
    if abs(alpha.sum() - (n - 2) * np.pi) > 1e-9:
        raise InfeasibleParameters("interior angles do not close a planar polygon")
    turn = np.pi - alpha
    theta = np.concatenate([[0.0], np.cumsum(turn[1:])])
    E = np.stack([np.cos(theta), np.sin(theta)])
    if lengths is None:
        ones = np.ones(n)
        lengths = ones - E.T @ np.linalg.solve(E @ E.T, E @ ones)
    lengths = np.asarray(lengths, dtype=float)
    if (lengths <= 1e-6).any() or np.linalg.norm(E @ lengths) > 1e-9 * lengths.sum():
        raise InfeasibleParameters("no closing polygon with positive edge lengths")
    A = np.zeros((n, 3))
    for i in range(n - 1):
        A[i + 1, :2] = A[i, :2] + lengths[i] * E[:, i]
    return A


def _solve_next(vertex, omega_prev):
    """Both signed dihedrals ``omega`` after a vertex, given the one before."""
    alpha, beta, gamma, phi = vertex
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cp, sp = math.cos(phi), math.sin(phi)
    tp, spv = math.cos(omega_prev), math.sin(omega_prev)
    # X cos(omega) + Y sin(omega) = Z
    X = sa * cb * sp - ca * sb * sp * tp
    Y = sb * sp * spv
    Z = math.cos(gamma) - ca * cb * cp - sa * sb * cp * tp
    r = math.hypot(X, Y)
    if r == 0.0 or abs(Z) > r * (1 + 1e-12):
        return []
    base = math.atan2(Y, X)
    delta = math.acos(max(-1.0, min(1.0, Z / r)))
    out = []
    for om in (base + delta, base - delta):
        om = math.atan2(math.sin(om), math.cos(om))
        if not any(abs(om - x) < 1e-14 for x in out):
            out.append(om)
    return out


def solve_dihedrals(angles, omega1, tol=1e-9):
    """All chains of signed dihedrals starting at ``omega1`` that close up.

    Returns a list of ``(residual, omegas)`` sorted by closure residual.
    """
    n = angles.n
    chains = [[omega1]]
    for k in range(1, n):
        chains = [c + [om] for c in chains for om in _solve_next(angles.vertex(k), c[-1])]
    closed = []
    for c in chains:
        res = abs(r_residual(*angles.vertex(0), c[-1], c[0]))
        if res <= tol:
            closed.append((res, np.array(c)))
    closed.sort(key=lambda item: (not (np.sin(item[1]) >= 0).all(), item[0]))
    return closed


def wing_vectors(A, angles, omegas, wing_length=1.0):
    """Wing vectors ``v``, ``w`` from face angles and signed dihedrals."""
    n = len(A)
    N = np.array([0.0, 0.0, 1.0])
    a = np.roll(A, -1, axis=0) - A
    v = np.empty((n, 3))
    w = np.empty((n, 3))
    for i in range(n):
        e = a[i] / np.linalg.norm(a[i])
        m = np.cross(N, e)
        w[i] = math.cos(angles.phi[i]) * e + math.sin(angles.phi[i]) * (
            math.cos(omegas[i]) * m + math.sin(omegas[i]) * N
        )
        ep = a[i - 1] / np.linalg.norm(a[i - 1])
        mp = np.cross(N, ep)
        om = omegas[i - 1]
        v[i] = -math.cos(angles.beta[i]) * ep + math.sin(angles.beta[i]) * (math.cos(om) * mp + math.sin(om) * N)
    return wing_length * v, wing_length * w


def realize_mesh(angles, omega1, lengths=None, tol=1e-9, wing_length=1.0):
    """Embed an angle set as a mesh with planar faces.

    The middle polygon is laid out in z = 0 from its angles, the dihedral
    chain is solved vertex by vertex starting from the signed ``omega1`` on
    edge ``A[0]A[1]``, and the wings are placed in the vertex frames.
    Raises `NoRealRealization` when no chain of real dihedrals closes.
    """
    alpha = np.asarray(angles.alpha, dtype=float)
    for name in ("alpha", "beta", "gamma", "phi"):
        _check_open(name, getattr(angles, name))
    A = quad_from_angles(alpha, lengths)
    chains = solve_dihedrals(angles, omega1, tol)
    if not chains:
        raise NoRealRealization(f"no real dihedral chain closes from omega1 = {omega1:.6g}")
    omegas = chains[0][1]
    v, w = wing_vectors(A, angles, omegas, wing_length)
    return KokotsakisMesh(A, A + v, A + w, {"omega": omegas.tolist()})


def find_realization(angles, rng=None, tries=200, tol=1e-9):
    """Search ``omega1`` (deterministically, then randomly) for a realization."""
    grid = np.concatenate([np.linspace(0.3, np.pi - 0.3, 25), -np.linspace(0.3, np.pi - 0.3, 25)])
    grid = grid[np.argsort(np.abs(np.abs(grid) - np.pi / 2), kind="stable")]
    if rng is not None:
        grid = np.concatenate([grid, rng.uniform(-np.pi, np.pi, tries)])
    for om in grid:
        try:
            return realize_mesh(angles, float(om), tol=tol), float(om)
        except NoRealRealization:
            continue
    raise NoRealRealization("no omega1 admits a real realization")
