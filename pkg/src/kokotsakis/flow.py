"""The flexion vector field and derivative flexibility conditions.

With the middle face fixed, the velocity of every finite flex is
proportional to the field

    vdot[i] = P[i] * (a[i-1] x v[i]),    wdot[i] = Q[i] * (a[i] x w[i]),

where ``Q[i] = prod_{j<=i} r[j]``, ``P[i] = Q[i-1]`` and
``r[j] = (a[j-1], v[j], w[j]) / (a[j], v[j], w[j])``.  Every corner and
every edge face but the last moves rigidly under it; the last edge face
moves rigidly exactly when ``chi = Q[n-1] = 1``.  Along a flex ``chi``
therefore stays 1 and all its time derivatives vanish.
"""
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCorner, StepFailure, UnreliableOrder
from .geometry import DEFAULT_TOL, triple_products
from .infinitesimal import corner_triple_products
from .mesh import KokotsakisMesh, derived_vectors


def _ratios(a, v, w, scale, tol=DEFAULT_TOL):
    prev = np.roll(a, 1, axis=0)
    num = triple_products(prev, v, w)
    den = triple_products(a, v, w)
    bad = np.flatnonzero(np.abs(den) <= tol * scale**3)
    if bad.size:
        raise DegenerateCorner(int(bad[0]), f"(a{bad[0] + 1}, v{bad[0] + 1}, w{bad[0] + 1}) vanishes")
    return num, den, num / den


def prefix_products(mesh):
    """``Q[i] = prod_{j<=i} r[j]``; ``Q[-1]`` is ``chi``."""
    a, v, w = derived_vectors(mesh)
    return np.cumprod(_ratios(a, v, w, mesh.scale)[2])


SIGMA_MARGIN = 1e-3


def _corner_margin(a, v, w):
    den = triple_products(a, v, w)
    size = np.linalg.norm(a, axis=1) * np.linalg.norm(v, axis=1) * np.linalg.norm(w, axis=1)
    return float((np.abs(den) / size).min())


def corner_margin(mesh):
    """``min |(a[i], v[i], w[i])| / (|a[i]| |v[i]| |w[i]|)``: distance from
    the corners where the flexion field is singular, as a sine."""
    a, v, w = derived_vectors(mesh)
    return _corner_margin(a, v, w)


def _field(a, v, w, scale):
    _, _, r = _ratios(a, v, w, scale)
    Q = np.cumprod(r)
    P = np.concatenate([[1.0], Q[:-1]])
    prev = np.roll(a, 1, axis=0)
    return P[:, None] * np.cross(prev, v), Q[:, None] * np.cross(a, w)


def xi_field(mesh):
    """``(vdot, wdot)``, each of shape ``(n, 3)``."""
    a, v, w = derived_vectors(mesh)
    return _field(a, v, w, mesh.scale)


@dataclass(frozen=True)
class FlowState:
    mesh: KokotsakisMesh
    time: float
    prefix: np.ndarray

    @classmethod
    def of(cls, mesh, time=0.0):
        return cls(mesh, float(time), prefix_products(mesh))

    @property
    def chi(self):
        return float(self.prefix[-1])


@dataclass
class Trajectory:
    states: list
    truncated: bool = False
    reason: str = ""
    steps: int = 0
    rejected: int = 0

    @property
    def times(self):
        return np.array([s.time for s in self.states])

    @property
    def chis(self):
        return np.array([s.chi for s in self.states])

    @property
    def final(self):
        return self.states[-1]


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _dp45_step(f, y, h):
    k = []
    for stage in range(7):
        yi = y + h * sum(coef * k[j] for j, coef in enumerate(_A[stage])) if stage else y
        k.append(f(yi))
    y5 = y + h * sum(b * kk for b, kk in zip(_B5, k))
    err = h * sum((b5 - b4) * kk for b5, b4, kk in zip(_B5, _B4, k))
    return y5, err


def integrate_flow(
    mesh, duration, tol=1e-9, t_eval=None, max_steps=200_000, renormalize=True, corner_margin=SIGMA_MARGIN
):
    """Integrate the flexion field with the middle face held fixed.

    Adaptive Dormand-Prince 5(4); after each accepted step the wing vectors
    are rescaled to their initial lengths, which the exact flow preserves.
    ``t_eval`` lists the times to record (default: every accepted step).
    The trajectory is truncated, with a reason, once `corner_margin` of
    the current mesh drops below ``corner_margin`` (the field blows up
    there and ``chi`` loses its digits), or if the step size collapses.
    """
    n = mesh.n
    A = mesh.A
    a = mesh.a
    scale = mesh.scale
    _, v0, w0 = derived_vectors(mesh)
    lv = np.linalg.norm(v0, axis=1)
    lw = np.linalg.norm(w0, axis=1)

    def unpack(y):
        y = y.reshape(2 * n, 3)
        return y[:n], y[n:]

    def f(y):
        v, w = unpack(y)
        vd, wd = _field(a, v, w, scale)
        return np.concatenate([vd, wd]).ravel()

    def make_state(y, t):
        v, w = unpack(y)
        return FlowState.of(KokotsakisMesh(A, A + v, A + w, mesh.meta), t)

    y = np.concatenate([v0, w0]).ravel()
    try:
        start = FlowState.of(mesh, 0.0)
        f0 = f(y)
    except DegenerateCorner as exc:
        raise StepFailure(f"flow undefined at t = 0: {exc}") from exc

    duration = float(duration)
    direction = 1.0 if duration >= 0 else -1.0
    if t_eval is None:
        targets = [duration]
        record_all = True
    else:
        targets = sorted((float(t) for t in t_eval), key=lambda t: direction * t)
        if any(direction * t < 0 or abs(t) > abs(duration) * (1 + 1e-12) for t in targets):
            raise ValueError("t_eval must lie between 0 and duration")
        record_all = False
    states = [start] if (record_all or (targets and targets[0] == 0.0)) else []
    targets = [t for t in targets if t != 0.0]
    traj = Trajectory(states)
    if duration == 0.0:
        if not traj.states:
            traj.states.append(start)
        return traj

    speed = np.abs(f0).max()
    h = direction * min(abs(duration), 0.01 * scale / speed if speed > 0 else abs(duration))
    t = 0.0
    hmin = 1e-14 * max(abs(duration), 1.0)
    atol = tol * scale
    while targets:
        if traj.steps + traj.rejected >= max_steps:
            traj.truncated, traj.reason = True, f"step budget {max_steps} exhausted at t = {t:.6g}"
            break
        target = targets[0]
        last = abs(target - t) <= abs(h)
        step = (target - t) if last else h
        try:
            y_new, err = _dp45_step(f, y, step)
            sc = atol + tol * np.maximum(np.abs(y), np.abs(y_new))
            enorm = float(np.sqrt(np.mean((err / sc) ** 2)))
        except DegenerateCorner as exc:
            enorm = math.inf
            failure = str(exc)
        else:
            failure = ""
        if not np.isfinite(enorm) or enorm > 1.0:
            traj.rejected += 1
            h = step * 0.25 if not np.isfinite(enorm) else step * max(0.2, 0.9 * enorm ** -0.2)
            if abs(h) < hmin:
                traj.truncated = True
                traj.reason = f"step size collapsed near t = {t:.6g}" + (f" ({failure})" if failure else "")
                break
            continue
        traj.steps += 1
        t = target if last else t + step
        y = y_new
        if renormalize:
            v, w = unpack(y)
            v = v * (lv / np.linalg.norm(v, axis=1))[:, None]
            w = w * (lw / np.linalg.norm(w, axis=1))[:, None]
            y = np.concatenate([v, w]).ravel()
        if corner_margin > 0:
            v, w = unpack(y)
            margin = _corner_margin(a, v, w)
            if margin < corner_margin:
                traj.truncated = True
                traj.reason = f"approaching a degenerate corner at t = {t:.6g} (margin {margin:.2g})"
                break
        if last:
            targets.pop(0)
        if last or record_all:
            try:
                traj.states.append(make_state(y, t))
            except DegenerateCorner as exc:
                traj.truncated, traj.reason = True, f"degenerate corner at t = {t:.6g}: {exc}"
                break
        grow = 5.0 if enorm == 0 else min(5.0, 0.9 * enorm ** -0.2)
        if not last:
            h = step * grow
        else:
            h = direction * max(abs(h), abs(step) * grow) if abs(step) >= abs(h) else h
    return traj


# ------------------------------------------------------------- derivatives


@dataclass(frozen=True)
class Ingredients:
    """Time derivatives of the basic scalars at one vertex ``i``.

    ``triple_k`` maps ``k`` in ``{i-1, i}`` (cyclic, 0-based) to
    ``(a[k], v[i], w[i])'``.
    """

    i: int
    dot_a_v: float  # <a[i], v[i]>'
    dot_prev_w: float  # <a[i-1], w[i]>'
    triple_v: float  # (a[i-1], a[i], v[i])'
    triple_w: float  # (a[i-1], a[i], w[i])'
    triple_k: dict


def _prefixes(mesh):
    Q = prefix_products(mesh)
    return np.concatenate([[1.0], Q[:-1]]), Q


def derivative_ingredients(mesh, i):
    a, v, w = derived_vectors(mesh)
    n = mesh.n
    i %= n
    P, Q = _prefixes(mesh)
    ap, ai, vi, wi = a[i - 1], a[i], v[i], w[i]
    dot = np.dot
    t_v = float(np.dot(np.cross(ap, ai), vi))
    t_w = float(np.dot(np.cross(ap, ai), wi))

    def triple_k(ak):
        return (dot(ak, vi) * dot(ap, wi) - dot(ap, ak) * dot(vi, wi)) * P[i] + (
            dot(ai, ak) * dot(vi, wi) - dot(ai, vi) * dot(ak, wi)
        ) * Q[i]

    return Ingredients(
        i=i,
        dot_a_v=float(-t_v * P[i]),
        dot_prev_w=float(t_w * Q[i]),
        triple_v=float((dot(ap, ap) * dot(ai, vi) - dot(ap, ai) * dot(ap, vi)) * P[i]),
        triple_w=float((dot(ap, ai) * dot(ai, wi) - dot(ai, ai) * dot(ap, wi)) * Q[i]),
        triple_k={(i - 1) % n: float(triple_k(ap)), i: float(triple_k(ai))},
    )


@dataclass(frozen=True)
class ChiPrime:
    value: float  # from the four-sum
    product_rule: float  # assembled from the ingredients
    four_sum: float  # the raw four-sum, equal to -chi'/chi


def four_sum(mesh):
    """The four sums whose vanishing is equivalent to ``chi' = 0``.

    They add up to ``-chi' / chi``.  The prefix product in every sum is
    ``P[i]`` or ``Q[i]`` as in the ingredient rows.
    """
    a, v, w = derived_vectors(mesh)
    num, den = corner_triple_products(mesh)
    P, Q = _prefixes(mesh)
    prev = np.roll(a, 1, axis=0)
    d = lambda x, y: np.einsum("ij,ij->i", x, y)
    av, pw, pa, vw = d(a, v), d(prev, w), d(prev, a), d(v, w)
    aa, aw, pv, pp = d(a, a), d(a, w), d(prev, v), d(prev, prev)
    s1 = (av * pw - pa * vw) / den * P
    s2 = (aa * vw - av * aw) / den * Q
    s3 = (pv * pw - pp * vw) / num * P
    s4 = (pa * vw - av * pw) / num * Q
    return float(s1.sum() + s2.sum() - s3.sum() - s4.sum())


def chi_prime(mesh):
    """``chi'`` along the flexion field, by two independent assemblies."""
    num, den = corner_triple_products(mesh)
    chi = float(np.prod(num / den))
    s = four_sum(mesh)
    log_derivative = 0.0
    for i in range(mesh.n):
        ing = derivative_ingredients(mesh, i)
        log_derivative += ing.triple_k[(i - 1) % mesh.n] / num[i] - ing.triple_k[i] / den[i]
    return ChiPrime(value=-chi * s, product_rule=chi * log_derivative, four_sum=s)


def fd_weights(offsets, order):
    """Finite-difference weights for the ``order``-th derivative at 0.

    Fornberg's recursion on arbitrary distinct ``offsets`` (in units of h).
    """
    x = np.asarray(offsets, dtype=float)
    m = len(x)
    c = np.zeros((m, order + 1))
    c1, c4 = 1.0, x[0]
    c[0, 0] = 1.0
    for i in range(1, m):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def _half_width(k):
    return (k + 2) // 2


def _accuracy(k):
    return 2 if k % 2 else 4


@dataclass
class DerivativeReport:
    order: int
    values: list  # values[k] = chi^(k), values[0] = chi
    errors: list  # error estimates per order (0 for closed forms)
    methods: list  # "value", "closed-form", "finite-difference"
    steps: list  # step size used per order (None for closed forms)
    resolved: list = field(default_factory=list)  # |value| > error

    def vanishes(self, k):
        """True when ``chi^(k)`` is zero within its error bar."""
        return abs(self.values[k]) <= self.errors[k]

    def to_dict(self):
        return {
            "order": self.order,
            "values": [float(x) for x in self.values],
            "errors": [float(x) for x in self.errors],
            "methods": list(self.methods),
            "steps": list(self.steps),
        }


def _chi_samples(mesh, h, half, tol):
    """``chi(j h)`` for ``j = -half..half`` along the flow."""
    grid = [j * h for j in range(1, half + 1)]
    out = {0: prefix_products(mesh)[-1]}
    for sign in (1.0, -1.0):
        traj = integrate_flow(mesh, sign * grid[-1], tol=tol, t_eval=[sign * t for t in grid])
        if traj.truncated or len(traj.states) != half:
            raise StepFailure(traj.reason or "trajectory too short for the stencil")
        for j, s in enumerate(traj.states, start=1):
            out[int(sign) * j] = s.chi
    return np.array([out[j] for j in range(-half, half + 1)])


def chi_rounding(mesh):
    """A bound on the floating-point error of evaluating ``chi``.

    Each triple product carries an absolute error of a few ulps of
    ``|x| |y| |z|``; relative to the product itself that is its condition.
    """
    a, v, w = derived_vectors(mesh)
    num, den = corner_triple_products(mesh)
    prev = np.roll(a, 1, axis=0)
    size = np.linalg.norm(v, axis=1) * np.linalg.norm(w, axis=1)
    cond = (np.linalg.norm(prev, axis=1) * size / np.abs(num)).sum()
    cond += (np.linalg.norm(a, axis=1) * size / np.abs(den)).sum()
    return 8 * np.finfo(float).eps * abs(float(np.prod(num / den))) * cond


def time_scale(mesh):
    """Time for the fastest wing to move by one mesh scale."""
    vd, wd = xi_field(mesh)
    speed = max(np.linalg.norm(vd, axis=1).max(), np.linalg.norm(wd, axis=1).max())
    return mesh.scale / speed


def _fd_estimate(data, k, half):
    """Best Richardson-extrapolated ``k``-th difference over the step ladder."""
    p, q = _half_width(k), _accuracy(k)
    offs = np.arange(-p, p + 1)
    w = fd_weights(offs, k)
    mid = 2 * half
    best = None
    for h, fine, noise in data:
        d_h = float(np.dot(w, fine[mid + 2 * offs])) / h**k
        d_h2 = float(np.dot(w, fine[mid + offs])) / (h / 2) ** k
        rich = (2**q * d_h2 - d_h) / (2**q - 1)
        trunc = abs(d_h2 - d_h) / (2**q - 1)
        err = trunc + noise * np.abs(w).sum() * (2**q + 1) / (2**q - 1) / (h / 2) ** k
        if best is None or err < best[1]:
            best = (rich, err, h)
    if best is None:
        raise StepFailure("no step size admits a finite-difference stencil")
    return best


def chi_higher_derivatives(mesh, K=6, tol=1e-11, steps=None, strict=False):
    """``chi, chi', ..., chi^(K)`` along the flexion field.

    Order 1 comes from the closed form; its error bar also absorbs the gap
    to a finite-difference estimate, so an input that is flexible only up
    to rounding is not mistaken for a resolved ``chi'``.  Higher orders
    come from central differences of ``chi`` sampled on the integrated
    trajectory, with one Richardson step.  For each order the step is
    picked from a halving ladder to minimize truncation estimate plus
    propagated noise.  The noise is the larger of the evaluation rounding
    of ``chi`` and the gap between samplings at ``tol`` and ``100 * tol``.
    With ``strict`` an `UnreliableOrder` warning is issued for orders whose
    error bar exceeds ``|value|``.
    """
    chi = float(prefix_products(mesh)[-1])
    report = DerivativeReport(K, [chi], [chi_rounding(mesh)], ["value"], [None])
    if K >= 1:
        T = time_scale(mesh)
        ladder = steps if steps is not None else [T * 2.0**-j for j in range(1, 11)]
        half = _half_width(K)
        floor = chi_rounding(mesh)
        data = []
        for h in ladder:
            try:
                fine = _chi_samples(mesh, h / 2, 2 * half, tol)
                coarse = _chi_samples(mesh, h / 2, 2 * half, tol * 100)
            except (StepFailure, DegenerateCorner):
                continue
            data.append((h, fine, max(np.abs(fine - coarse).max(), floor)))
        cp = chi_prime(mesh)
        fd1, fd1_err, _ = _fd_estimate(data, 1, half)
        gap = abs(cp.value - cp.product_rule)
        report.values.append(cp.value)
        report.errors.append(max(gap, abs(cp.value - fd1) + fd1_err))
        report.methods.append("closed-form")
        report.steps.append(None)
        for k in range(2, K + 1):
            value, err, h = _fd_estimate(data, k, half)
            report.values.append(value)
            report.errors.append(err)
            report.methods.append("finite-difference")
            report.steps.append(h)
    report.resolved = [abs(v) > e for v, e in zip(report.values, report.errors)]
    if strict:
        for k in range(1, K + 1):
            if not report.resolved[k]:
                warnings.warn(f"chi^({k}) is not resolved from zero", UnreliableOrder, stacklevel=2)
    return report


# ---------------------------------------------------------------- exports


def mesh_to_obj(mesh, comment=None):
    """Wavefront OBJ text: vertices ``A``, ``V``, ``W``; all faces as polygons."""
    n = mesh.n
    out = io.StringIO()
    if comment:
        out.write(f"# {comment}\n")
    for X in (mesh.A, mesh.V, mesh.W):
        for p in X:
            out.write(f"v {p[0]!r} {p[1]!r} {p[2]!r}\n")
    A = lambda i: i % n + 1
    V = lambda i: n + i % n + 1
    W = lambda i: 2 * n + i % n + 1
    out.write("f " + " ".join(str(A(i)) for i in range(n)) + "\n")
    for i in range(n):
        out.write(f"f {V(i)} {A(i)} {W(i)}\n")
        out.write(f"f {W(i)} {A(i)} {A(i + 1)} {V(i + 1)}\n")
    return out.getvalue()


def trajectory_csv(traj):
    """CSV with ``t, chi, chi_prime`` and the corner triple products."""
    n = traj.states[0].mesh.n
    head = ["t", "chi", "chi_prime"]
    head += [f"num{i + 1}" for i in range(n)] + [f"den{i + 1}" for i in range(n)]
    lines = [",".join(head)]
    for s in traj.states:
        num, den = corner_triple_products(s.mesh)
        row = [s.time, s.chi, chi_prime(s.mesh).value, *num, *den]
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"
