import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kokotsakis.errors import DegenerateCorner
from kokotsakis.geometry import random_rotation
from kokotsakis.infinitesimal import (
    chi,
    closed_form_motion,
    corner_motions,
    corner_system,
    f1_numerator,
    is_infinitesimally_flexible,
    motion_nullspace,
)
from kokotsakis.mesh import KokotsakisMesh, random_mesh

from test_mesh import square_mesh

seeds = st.integers(0, 2**32 - 1)


def test_square_mesh_chi_by_hand():
    # every corner ratio is (-1)/1 except the last, (-1)/2
    x = chi(square_mesh())
    np.testing.assert_array_equal(x.numerators, [-1, -1, -1, -1])
    np.testing.assert_array_equal(x.denominators, [1, 1, 1, 2])
    assert x.value == 0.5
    assert f1_numerator(square_mesh()) == -1.0


def test_square_mesh_becomes_flexible():
    m = square_mesh(v3=(0, 1, 1))
    assert chi(m).value == 1.0
    assert is_infinitesimally_flexible(m).flexible
    assert not is_infinitesimally_flexible(square_mesh()).flexible


def test_frozen_random_chi():
    m = random_mesh(5, np.random.default_rng(42))
    assert chi(m).value == pytest.approx(-2.9905024391245476, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(0.1, 10), st.booleans())
def test_chi_is_affine_invariant(seed, s, mirror):
    rng = np.random.default_rng(seed)
    m = random_mesh(4, rng)
    L = random_rotation(rng) @ np.diag([s, 1.0, -1.0 if mirror else 1.0]) @ random_rotation(rng)
    moved = KokotsakisMesh(m.A @ L.T, m.V @ L.T, m.W @ L.T)
    assert chi(moved).value == pytest.approx(chi(m).value, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(0, 5))
def test_chi_ignores_starting_vertex(seed, k):
    m = random_mesh(6, np.random.default_rng(seed))
    assert chi(m.rolled(k)).value == pytest.approx(chi(m).value, rel=1e-10)


def test_degenerate_corner_detected():
    m = square_mesh()
    V = m.V.copy()
    V[2] = m.A[2] + m.a[2] + m.w[2]  # v3 in the plane of a3 and w3
    with pytest.raises(DegenerateCorner) as info:
        chi(KokotsakisMesh(m.A, V, m.W))
    assert info.value.index == 2


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_closed_form_motion_spans_the_nullspace(seed):
    b, c, v, w = np.random.default_rng(seed).normal(size=(4, 3))
    vdot, wdot = closed_form_motion(b, c, v, w)
    M = corner_system(b, c, v, w)
    x = np.concatenate([vdot, wdot])
    assert np.abs(M @ x).max() <= 1e-9 * np.abs(x).max()
    ns = motion_nullspace(b, c, v, w)
    assert ns.dim == 1
    assert abs(abs(ns.basis[0] @ x) / np.linalg.norm(x) - 1) < 1e-9


def test_closed_form_motion_rejects_coplanar_fixed_face():
    with pytest.raises(DegenerateCorner):
        closed_form_motion([1, 1, 0], [0, 0, 1], [1, 0, 0], [0, 1, 0])


def _edge_rate(dot, edge, x):
    """Scalar k with ``dot = k * edge x x``."""
    u = np.cross(edge, x)
    return float(dot @ u / (u @ u))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_chained_corners_close_up_to_chi(seed):
    m = random_mesh(5, np.random.default_rng(seed))
    mot = corner_motions(m)
    a, n = m.a, m.n
    for i in range(n):
        j = (i + 1) % n
        left = _edge_rate(mot[i].wdot, a[i], m.w[i])
        right = _edge_rate(mot[j].vdot, a[i], m.v[j])
        # the shared edge face turns at one rate, except across the seam
        expected = 1.0 if j else 1.0 / chi(m).value
        assert right / left == pytest.approx(expected, rel=1e-8)
