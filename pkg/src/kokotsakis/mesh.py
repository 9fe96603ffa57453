"""Kokotsakis mesh data model.

A mesh is a central n-gon ``A[0..n-1]`` plus two wing vertices ``V[i]``,
``W[i]`` per central vertex.  At ``A[i]`` four faces meet, containing the
angles

    alpha_i = angle(A[i+1], A[i], A[i-1])
    beta_i  = angle(A[i-1], A[i], V[i])
    gamma_i = angle(V[i],   A[i], W[i])
    phi_i   = angle(W[i],   A[i], A[i+1])

so the face glued along edge ``A[i]A[i+1]`` is ``W[i] A[i] A[i+1] V[i+1]``.
Indices are cyclic; arrays are 0-based.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateAngle, LengthError, ParseError, SchemaVersionMismatch
from .geometry import DEFAULT_TOL, angle_between, random_rotation

SCHEMA = "kokotsakis/1"


def _frozen(x):
    a = np.array(x, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class KokotsakisMesh:
    A: np.ndarray
    V: np.ndarray
    W: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        A, V, W = (_frozen(x) for x in (self.A, self.V, self.W))
        if A.ndim != 2 or A.shape[1] != 3:
            raise ValueError("A must have shape (n, 3)")
        if V.shape != A.shape or W.shape != A.shape:
            raise LengthError(f"A, V, W must share shape {A.shape}; got {V.shape}, {W.shape}")
        if A.shape[0] < 3:
            raise ValueError("a Kokotsakis mesh needs n >= 3")
        if not (np.isfinite(A).all() and np.isfinite(V).all() and np.isfinite(W).all()):
            raise ValueError("vertex coordinates must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "meta", dict(self.meta or {}))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def a(self):
        return np.roll(self.A, -1, axis=0) - self.A

    @property
    def v(self):
        return self.V - self.A

    @property
    def w(self):
        return self.W - self.A

    @property
    def scale(self):
        """Geometric scale: the longest edge vector incident to the middle face."""
        a, v, w = derived_vectors(self)
        return float(max(np.linalg.norm(x, axis=1).max() for x in (a, v, w)))

    def with_wings(self, v, w):
        """Mesh with the same middle face and wing vectors ``v``, ``w``."""
        return KokotsakisMesh(self.A, self.A + v, self.A + w, self.meta)

    def transformed(self, R=None, shift=None, s=1.0):
        """Apply ``x -> s * R x + shift`` to every vertex."""
        R = np.eye(3) if R is None else np.asarray(R, dtype=float)
        shift = np.zeros(3) if shift is None else np.asarray(shift, dtype=float)
        f = lambda X: s * X @ R.T + shift
        return KokotsakisMesh(f(self.A), f(self.V), f(self.W), self.meta)

    def rolled(self, k):
        """Relabel the vertices so that old index ``k`` becomes index 0."""
        r = lambda X: np.roll(X, -k, axis=0)
        return KokotsakisMesh(r(self.A), r(self.V), r(self.W), self.meta)

    def __eq__(self, other):
        if not isinstance(other, KokotsakisMesh):
            return NotImplemented
        return (
            self.A.shape == other.A.shape
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.V, other.V)
            and np.array_equal(self.W, other.W)
        )

    __hash__ = None


def derived_vectors(mesh):
    """``(a, v, w)`` with ``a[i] = A[i+1] - A[i]``, ``v[i] = V[i] - A[i]``, ``w[i] = W[i] - A[i]``."""
    return mesh.a, mesh.v, mesh.w


@dataclass(frozen=True, eq=False)
class AngleSet:
    """Face angles at every central vertex plus optional dihedrals.

    ``omega[i]`` in ``(0, pi)`` is the dihedral along edge ``A[i]A[i+1]``
    between the middle face and the wing face.  ``omega_side[i]`` is ``+1``
    when the wing face rises along the oriented normal of the middle face
    and ``-1`` when it drops below; the signed dihedral is
    ``omega_side * omega``.
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    phi: np.ndarray
    omega: np.ndarray = None
    omega_side: np.ndarray = None

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "phi", "omega", "omega_side"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _frozen(value))
        n = len(self.alpha)
        for name in ("beta", "gamma", "phi"):
            if len(getattr(self, name)) != n:
                raise LengthError(f"{name} has length {len(getattr(self, name))}, expected {n}")
        if self.omega is not None and self.omega_side is None:
            object.__setattr__(self, "omega_side", _frozen(np.ones(n)))

    @property
    def n(self):
        return len(self.alpha)

    @property
    def signed_omega(self):
        if self.omega is None:
            return None
        return self.omega_side * self.omega

    def vertex(self, i):
        """``(alpha, beta, gamma, phi)`` at vertex ``i``."""
        return self.alpha[i], self.beta[i], self.gamma[i], self.phi[i]

    def face_angles_only(self):
        return AngleSet(self.alpha, self.beta, self.gamma, self.phi)

    def as_array(self):
        return np.stack([self.alpha, self.beta, self.gamma, self.phi])

    def max_difference(self, other, with_omega=False):
        d = np.abs(self.as_array() - other.as_array()).max()
        if with_omega:
            d = max(d, np.abs(self.signed_omega - other.signed_omega).max())
        return float(d)


@dataclass
class Issue:
    kind: str  # "CoincidingVertices" | "ConsecutiveCollinear"
    face: str
    labels: tuple


@dataclass
class ValidationReport:
    accepted: bool
    issues: list

    def __bool__(self):
        return self.accepted


def _label(kind, i):
    return f"{kind}{i + 1}"


def _face_chains(n):
    """Consecutive vertex triples of every face, as ((kind, index), ...) labels."""
    chains = []
    for i in range(n):
        chains.append(("central", (("A", i - 1), ("A", i), ("A", (i + 1) % n))))
    for i in range(n):
        p, q = (i - 1) % n, (i + 1) % n
        chains.append((f"edge{p + 1}", (("A", p), ("A", i), ("V", i))))
        chains.append((f"corner{i + 1}", (("V", i), ("A", i), ("W", i))))
        chains.append((f"edge{i + 1}", (("W", i), ("A", i), ("A", q))))
    return chains


def _face_vertex_sets(n):
    faces = [("central", [("A", i) for i in range(n)])]
    for i in range(n):
        q = (i + 1) % n
        faces.append((f"corner{i + 1}", [("V", i), ("A", i), ("W", i)]))
        faces.append((f"edge{i + 1}", [("W", i), ("A", i), ("A", q), ("V", q)]))
    return faces


def validate_theta(mesh, tol=DEFAULT_TOL):
    """Check that the mesh avoids the excluded degenerate set.

    Flags coinciding vertices inside a face and three consecutive collinear
    vertices along the middle polygon or the angle chains at each vertex.
    """
    pts = {"A": mesh.A, "V": mesh.V, "W": mesh.W}
    scale = mesh.scale
    issues = []
    for face, labels in _face_vertex_sets(mesh.n):
        for j in range(len(labels)):
            for k in range(j + 1, len(labels)):
                p, q = (pts[s][i] for s, i in (labels[j], labels[k]))
                if np.linalg.norm(p - q) <= tol * scale:
                    issues.append(Issue("CoincidingVertices", face, (_label(*labels[j]), _label(*labels[k]))))
    for face, labels in _face_chains(mesh.n):
        p, q, r = (pts[s][i] for s, i in labels)
        if np.linalg.norm(np.cross(p - q, r - q)) <= tol * scale**2:
            issues.append(Issue("ConsecutiveCollinear", face, tuple(_label(*x) for x in labels)))
    return ValidationReport(not issues, issues)


def central_normal(mesh):
    """Unit normal of the middle polygon, oriented so ``A`` runs counterclockwise."""
    A = mesh.A
    B = np.roll(A, -1, axis=0)
    # Newell's method
    N = np.cross(A, B).sum(axis=0)
    norm = np.linalg.norm(N)
    if norm == 0.0:
        raise DegenerateAngle("middle polygon has no well-defined normal")
    return N / norm


def extract_angles(mesh, tol=DEFAULT_TOL):
    """Measure the face angles and dihedrals of a mesh."""
    a, v, w = derived_vectors(mesh)
    n = mesh.n
    scale = mesh.scale
    for name, arr in (("a", a), ("v", v), ("w", w)):
        lengths = np.linalg.norm(arr, axis=1)
        if (lengths <= tol * scale).any():
            i = int(np.argmin(lengths))
            raise DegenerateAngle(f"vector {name}{i + 1} has vanishing length")
    prev = np.roll(a, 1, axis=0)
    alpha = np.array([angle_between(a[i], -prev[i]) for i in range(n)])
    beta = np.array([angle_between(-prev[i], v[i]) for i in range(n)])
    gamma = np.array([angle_between(v[i], w[i]) for i in range(n)])
    phi = np.array([angle_between(w[i], a[i]) for i in range(n)])

    N = central_normal(mesh)
    omega = np.empty(n)
    side = np.empty(n)
    for i in range(n):
        e = a[i] / np.linalg.norm(a[i])
        m = np.cross(N, e)
        d = w[i] - np.dot(w[i], e) * e
        if np.linalg.norm(d) <= tol * scale:
            raise DegenerateAngle(f"w{i + 1} is parallel to edge a{i + 1}")
        signed = np.arctan2(np.dot(d, N), np.dot(d, m))
        omega[i] = abs(signed)
        side[i] = 1.0 if signed >= 0 else -1.0
    return AngleSet(alpha, beta, gamma, phi, omega, side)


def face_angles(mesh):
    """All interior angles of all faces, in a fixed order.

    Corner faces contribute the triangle ``V A W``; edge faces the quad
    ``W[i] A[i] A[i+1] V[i+1]``.  Used to monitor isometric motion.
    """
    pts = {"A": mesh.A, "V": mesh.V, "W": mesh.W}
    out = []
    for _, labels in _face_vertex_sets(mesh.n):
        P = [pts[s][i] for s, i in labels]
        k = len(P)
        for j in range(k):
            out.append(angle_between(P[j - 1] - P[j], P[(j + 1) % k] - P[j]))
    return np.array(out)


def is_planar(points, tol=DEFAULT_TOL):
    P = np.asarray(points, dtype=float)
    c = P - P.mean(axis=0)
    scale = max(np.abs(c).max(), np.finfo(float).tiny)
    return np.linalg.svd(c, compute_uv=False)[-1] <= tol * scale * np.sqrt(len(P))


def faces_planar(mesh, tol=1e-8):
    """True when the middle face and every edge face are planar."""
    pts = {"A": mesh.A, "V": mesh.V, "W": mesh.W}
    for _, labels in _face_vertex_sets(mesh.n):
        if len(labels) > 3 and not is_planar([pts[s][i] for s, i in labels], tol):
            return False
    return True


# ---------------------------------------------------------------- generators


def random_convex_polygon(n, rng, jitter=0.35, radial=0.2):
    """Random strictly convex n-gon in the plane z = 0, counterclockwise."""
    while True:
        theta = 2 * np.pi * (np.arange(n) + rng.uniform(-jitter, jitter, n)) / n
        r = 1.0 + rng.uniform(-radial, radial, n)
        P = np.stack([r * np.cos(theta), r * np.sin(theta), np.zeros(n)], axis=1)
        e = np.roll(P, -1, axis=0) - P
        turns = np.cross(np.roll(e, 1, axis=0), e)[:, 2]
        lengths = np.linalg.norm(e, axis=1)
        if (turns > 0.05 * lengths * np.roll(lengths, 1)).all():
            return P


def random_planar_mesh(n, rng, margin=0.25, rigid=True):
    """Random mesh with a convex middle face and planar wing faces.

    Each edge face is placed in a plane through its edge at a random signed
    dihedral; the wing vertices are drawn inside that plane, so every face
    of the mesh is planar.
    """
    A = random_convex_polygon(n, rng)
    N = np.array([0.0, 0.0, 1.0])
    V = np.empty_like(A)
    W = np.empty_like(A)
    for i in range(n):
        q = (i + 1) % n
        e = A[q] - A[i]
        e /= np.linalg.norm(e)
        m = np.cross(N, e)
        om = rng.uniform(margin, np.pi - margin) * rng.choice([-1.0, 1.0])
        perp = np.cos(om) * m + np.sin(om) * N
        phi = rng.uniform(margin, np.pi - margin)
        beta = rng.uniform(margin, np.pi - margin)
        W[i] = A[i] + rng.uniform(0.5, 1.5) * (np.cos(phi) * e + np.sin(phi) * perp)
        V[q] = A[q] + rng.uniform(0.5, 1.5) * (-np.cos(beta) * e + np.sin(beta) * perp)
    mesh = KokotsakisMesh(A, V, W)
    if rigid:
        mesh = mesh.transformed(random_rotation(rng), rng.normal(size=3))
    return mesh


def random_mesh(n, rng):
    """Random mesh with a planar middle face and arbitrary wing vectors."""
    A = random_convex_polygon(n, rng)
    V = A + rng.normal(size=(n, 3))
    W = A + rng.normal(size=(n, 3))
    return KokotsakisMesh(A, V, W).transformed(random_rotation(rng), rng.normal(size=3))


# ---------------------------------------------------------------- documents


def mesh_to_document(mesh, meta=None):
    doc = {
        "schema": SCHEMA,
        "n": mesh.n,
        "A": mesh.A.tolist(),
        "V": mesh.V.tolist(),
        "W": mesh.W.tolist(),
    }
    merged = dict(mesh.meta)
    merged.update(meta or {})
    if merged:
        doc["meta"] = merged
    return doc


def save_mesh(mesh, meta=None):
    """Serialize to JSON bytes.  Floats use shortest round-trip repr."""
    return (json.dumps(mesh_to_document(mesh, meta), indent=1) + "\n").encode("utf-8")


def _vertex_array(doc, key, n):
    if key not in doc:
        raise ParseError("missing vertex array", field=key)
    rows = doc[key]
    if not isinstance(rows, list):
        raise ParseError("vertex array must be a list", field=key)
    if len(rows) != n:
        raise LengthError(f"field {key!r} has {len(rows)} vertices, n = {n}")
    out = np.empty((n, 3))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != 3:
            raise ParseError(f"vertex {i} must be a list of 3 numbers", field=f"{key}[{i}]")
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ParseError("coordinate is not a number", field=f"{key}[{i}][{j}]")
            out[i, j] = x
    return out


def parse_json(data):
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"document is not UTF-8: {exc}") from exc
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc


def mesh_from_document(doc):
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    if doc.get("schema") != SCHEMA:
        raise SchemaVersionMismatch(f"expected schema {SCHEMA!r}, got {doc.get('schema')!r}")
    n = doc.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 3:
        raise ParseError("n must be an integer >= 3", field="n")
    A, V, W = (_vertex_array(doc, k, n) for k in ("A", "V", "W"))
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise ParseError("meta must be an object", field="meta")
    return KokotsakisMesh(A, V, W, meta)


def load_mesh(data):
    """Parse a mesh document (``bytes`` or ``str``)."""
    return mesh_from_document(parse_json(data))
