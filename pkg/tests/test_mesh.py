import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kokotsakis.errors import LengthError, ParseError, SchemaVersionMismatch
from kokotsakis.mesh import (
    AngleSet,
    KokotsakisMesh,
    extract_angles,
    face_angles,
    faces_planar,
    load_mesh,
    random_planar_mesh,
    save_mesh,
    validate_theta,
)
from kokotsakis.geometry import random_rotation

SQUARE = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], float)


def square_mesh(v3=(0, 1, 2)):
    v = np.array([[-1, 0, 1], [0, -1, 1], [1, 0, 1], v3], float)
    w = np.array([[0, -1, 1], [1, 0, 1], [0, 1, 1], [-1, 0, 1]], float)
    return KokotsakisMesh(SQUARE, SQUARE + v, SQUARE + w)


def test_derived_vectors():
    m = square_mesh()
    np.testing.assert_array_equal(m.a[3], [0, -1, 0])
    np.testing.assert_array_equal(m.v[0], [-1, 0, 1])
    assert m.n == 4
    assert m.scale == pytest.approx(np.sqrt(5))


def test_square_angles_by_hand():
    s = extract_angles(square_mesh())
    np.testing.assert_allclose(s.alpha, np.pi / 2)
    np.testing.assert_allclose(s.beta, np.pi / 2)
    np.testing.assert_allclose(s.phi, np.pi / 2)
    np.testing.assert_allclose(s.gamma[:3], np.pi / 3)
    # angle between (0,1,2) and (-1,0,1): cos = 2 / sqrt(10)
    assert s.gamma[3] == pytest.approx(np.arccos(2 / np.sqrt(10)))
    # w rises at 45 degrees outward, so the dihedral is 135 degrees
    np.testing.assert_allclose(s.omega, 3 * np.pi / 4)
    np.testing.assert_array_equal(s.omega_side, 1.0)


def test_mirror_flips_dihedral_sides():
    m = square_mesh()
    flipped = KokotsakisMesh(m.A, m.V * [1, 1, -1], m.W * [1, 1, -1])
    s = extract_angles(flipped)
    np.testing.assert_array_equal(s.omega_side, -1.0)
    np.testing.assert_allclose(s.omega, extract_angles(m).omega)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_angles_are_rigid_motion_invariant(seed):
    rng = np.random.default_rng(seed)
    m = random_planar_mesh(5, rng)
    moved = m.transformed(random_rotation(rng), rng.normal(size=3), s=rng.uniform(0.2, 5))
    a, b = extract_angles(m), extract_angles(moved)
    assert a.max_difference(b, with_omega=True) < 1e-9
    np.testing.assert_allclose(face_angles(m), face_angles(moved), atol=1e-9)


def test_random_planar_mesh_has_planar_faces():
    m = random_planar_mesh(6, np.random.default_rng(1))
    assert faces_planar(m)
    assert not faces_planar(square_mesh())


def test_validate_theta_flags_degeneracies():
    assert validate_theta(square_mesh())
    m = square_mesh()
    W = m.W.copy()
    W[0] = m.V[0]
    bad = validate_theta(KokotsakisMesh(m.A, m.V, W))
    assert not bad
    kinds = {(i.kind, i.face) for i in bad.issues}
    assert ("CoincidingVertices", "corner1") in kinds
    V = m.V.copy()
    V[1] = m.A[1] + [-1, 0, 0]  # collinear with A[0], A[1]
    report = validate_theta(KokotsakisMesh(m.A, V, m.W))
    assert any(i.kind == "ConsecutiveCollinear" and i.labels == ("A1", "A2", "V2") for i in report.issues)


def test_rolled_relabels():
    m = square_mesh()
    r = m.rolled(1)
    np.testing.assert_array_equal(r.A[0], m.A[1])
    np.testing.assert_array_equal(r.V[3], m.V[0])


def test_mesh_rejects_bad_shapes():
    with pytest.raises(LengthError):
        KokotsakisMesh(SQUARE, SQUARE[:3], SQUARE)
    with pytest.raises(ValueError):
        KokotsakisMesh(SQUARE[:2], SQUARE[:2], SQUARE[:2])
    with pytest.raises(ValueError):
        KokotsakisMesh(SQUARE * np.nan, SQUARE, SQUARE)


def test_angle_set_length_check():
    with pytest.raises(LengthError):
        AngleSet(np.ones(4), np.ones(4), np.ones(3), np.ones(4))


def test_document_round_trip_is_bit_exact():
    m = random_planar_mesh(7, np.random.default_rng(3))
    data = save_mesh(m, {"source": "test"})
    back = load_mesh(data)
    assert back == m
    assert back.meta["source"] == "test"
    assert save_mesh(back) == data


@pytest.mark.parametrize(
    "mutate, error",
    [
        (lambda d: d.update(schema="kokotsakis/0"), SchemaVersionMismatch),
        (lambda d: d.update(n=5), LengthError),
        (lambda d: d["A"][0].pop(), ParseError),
        (lambda d: d["V"][1].__setitem__(0, "x"), ParseError),
        (lambda d: d.pop("W"), ParseError),
        (lambda d: d.update(n=True), ParseError),
        (lambda d: d.update(meta=[]), ParseError),
    ],
)
def test_malformed_documents(mutate, error):
    doc = json.loads(save_mesh(square_mesh()))
    mutate(doc)
    with pytest.raises(error):
        load_mesh(json.dumps(doc))


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as info:
        load_mesh(b'{\n"schema": \n}')
    assert info.value.line == 3
