import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from kokotsakis.angles import (
    FAMILIES,
    CornerCoefficients,
    ExactAngles,
    Trig,
    build_f1_f2,
    c_coefficients,
    composed_f1_f2,
    edge_face_flips,
    eliminate_t2_t4,
    exact_voss_angles,
    family_angles,
    family_relations,
    find_realization,
    flex_certificate,
    flip_wings,
    format_relation,
    is_edge_face_flip,
    isogonal_factor,
    load_angles,
    quad_from_angles,
    r_residual,
    random_exact_family,
    rbar_residual,
    realize_mesh,
    relation_residuals,
    save_angles,
)
from kokotsakis.errors import InfeasibleParameters, NoRealRealization, ParseError, SchemaVersionMismatch
from kokotsakis.mesh import AngleSet, extract_angles

from conftest import random_angle_set, well_conditioned_mesh

angle = st.floats(0.1, math.pi - 0.1)
signed = st.floats(-math.pi, math.pi)
seeds = st.integers(0, 2**32 - 1)


@given(angle, angle, angle, angle, signed, signed)
def test_squaring_identity(alpha, beta, gamma, phi, om_prev, om_cur):
    # the squared relation factors as r * (r - 2 sin(beta) sin(phi) sin(om_prev) sin(om_cur))
    r = r_residual(alpha, beta, gamma, phi, om_prev, om_cur)
    C = c_coefficients(alpha, beta, gamma, phi)
    lhs = rbar_residual(C, math.cos(om_prev), math.cos(om_cur))
    cross = 2 * math.sin(beta) * math.sin(phi) * math.sin(om_prev) * math.sin(om_cur)
    assert lhs == pytest.approx(r * (r - cross), abs=1e-12)


def test_right_angle_coefficients():
    C = c_coefficients(*(math.pi / 2,) * 4)
    np.testing.assert_allclose(C, [-1, 0, 0, 1, 0, 1, 0, 0, -1], atol=1e-15)


@given(angle, angle, angle, angle, st.floats(-1, 1), st.floats(-1, 1))
def test_coefficients_expand_the_squared_relation(alpha, beta, gamma, phi, tp, tc):
    # the relation without its sine-sine term, squared, minus that term squared
    ca, sa, cb, sb = math.cos(alpha), math.sin(alpha), math.cos(beta), math.sin(beta)
    cp, sp = math.cos(phi), math.sin(phi)
    rest = ca * cb * cp + sa * sb * cp * tp + sa * cb * sp * tc - ca * sb * sp * tp * tc - math.cos(gamma)
    expected = rest**2 - (sb * sp) ** 2 * (1 - tp**2) * (1 - tc**2)
    got = rbar_residual(c_coefficients(alpha, beta, gamma, phi), tp, tc)
    assert got == pytest.approx(expected, abs=1e-12)


def _vertex_data(mesh):
    s = extract_angles(mesh)
    om = s.signed_omega
    return s, om


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_realized_meshes_satisfy_the_vertex_relation(seed):
    s, om = _vertex_data(well_conditioned_mesh(np.random.default_rng(seed)))
    for i in range(4):
        assert abs(r_residual(*s.vertex(i), om[i - 1], om[i])) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_elimination_recovers_t2_t4(seed):
    s, om = _vertex_data(well_conditioned_mesh(np.random.default_rng(seed)))
    t = np.cos(om)
    C = CornerCoefficients.from_angles(s)
    t2, t4 = eliminate_t2_t4(C, t[0], t[2])
    # t2 is pinned by the second and third relations, t4 by the first and fourth
    assert t2 == pytest.approx(t[1], abs=1e-6)
    assert t4 == pytest.approx(t[3], abs=1e-6)
    f1, f2 = build_f1_f2(C)
    assert abs(f1(t[0], t[2])) <= 1e-9 * f1.norm()
    assert abs(f2(t[0], t[2])) <= 1e-9 * f2.norm()


def test_f1_f2_vanish_along_a_flexion(voss_flow):
    _, mesh, traj = voss_flow
    C = CornerCoefficients.from_angles(extract_angles(mesh))
    f1, f2 = build_f1_f2(C)
    assert max(f1.degrees) <= 10 and max(f2.degrees) <= 10
    t1s = []
    for state in traj.states:
        t = np.cos(extract_angles(state.mesh).signed_omega)
        t1s.append(t[0])
        assert abs(f1(t[0], t[2])) <= 1e-8 * f1.norm()
        assert abs(f2(t[0], t[2])) <= 1e-8 * f2.norm()
    assert np.ptp(t1s) > 1e-2  # the dihedral actually moved


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(-5, 5), st.floats(-5, 5))
def test_composed_matches_expanded(seed, t1, t3):
    C = CornerCoefficients.from_angles(random_angle_set(np.random.default_rng(seed)))
    f1, f2 = build_f1_f2(C)
    g1, g2 = composed_f1_f2(C, t1, t3)
    assert f1(t1, t3) == pytest.approx(g1, rel=1e-8, abs=1e-10 * f1.norm() * (1 + abs(t1) + abs(t3)) ** 10)
    assert f2(t1, t3) == pytest.approx(g2, rel=1e-8, abs=1e-10 * f2.norm() * (1 + abs(t1) + abs(t3)) ** 10)


def test_exact_and_float_coefficients_agree():
    exact = random_exact_family("voss", np.random.default_rng(3))
    Ce = CornerCoefficients.from_angles(exact)
    Cf = CornerCoefficients.from_angles(exact.to_angle_set())
    assert Ce.exact and not Cf.exact
    np.testing.assert_allclose(Ce.rows.astype(float), Cf.rows, atol=1e-14)


def test_trig_from_half_tangent():
    t = Trig.from_half_tangent(Fraction(1, 2))
    assert (t.cos, t.sin) == (Fraction(3, 5), Fraction(4, 5))
    assert t.half_tangent() == Fraction(1, 2)
    assert t.angle == pytest.approx(2 * math.atan(0.5))


def test_exact_voss_closure_is_exact():
    angles = exact_voss_angles([Fraction(1), Fraction(9, 10), Fraction(11, 10)], [Fraction(1, 2)] * 3)
    a = [x.half_tangent() for x in angles.alpha]
    b = [x.half_tangent() for x in angles.beta]
    k = [isogonal_factor(a[i], b[i], 1) for i in range(4)]
    assert k[0] * k[2] == k[1] * k[3]
    assert b[3] == Fraction(25273, 43014)
    assert sum(x.angle for x in angles.alpha) == pytest.approx(2 * math.pi)
    assert angles.gamma == angles.alpha and angles.phi == angles.beta


def test_exact_voss_rejects_bad_tangents():
    with pytest.raises(InfeasibleParameters):
        exact_voss_angles([Fraction(1), Fraction(1), Fraction(1)], [1, 1, 1])
    with pytest.raises(InfeasibleParameters):
        exact_voss_angles([1, 1], [1, 1, 1])


@pytest.mark.parametrize("kind", FAMILIES)
def test_family_draws_satisfy_their_relations(kind):
    rng = np.random.default_rng(8)
    for _ in range(10):
        a = family_angles(kind, rng=rng)
        res = relation_residuals(a, family_relations(kind))
        assert max(res.values()) < 1e-12


@pytest.mark.parametrize("kind", FAMILIES)
def test_exact_family_certificates_vanish(kind):
    cert = flex_certificate(random_exact_family(kind, np.random.default_rng(21)))
    assert cert.exact and cert.flexible
    assert all(v == 0 for v in cert.valid_values)


def test_exact_certificate_of_a_perturbed_draw_is_rigid():
    a = random_exact_family("voss", np.random.default_rng(22))
    beta = list(a.beta)
    beta[3] = Trig.from_half_tangent(beta[3].half_tangent() + Fraction(1, 1000))
    cert = flex_certificate(ExactAngles(a.alpha, tuple(beta), a.gamma, a.phi), samples=range(-5, 6))
    assert cert.verdict == "rigid"


def test_relation_formatting():
    labels = [format_relation(*r) for r in family_relations("sign_flip")]
    assert labels[:3] == ["alpha1 + gamma1 = pi", "beta1 + phi1 = pi", "alpha2 = gamma2"]
    assert [format_relation(*r) for r in family_relations("symmetric_14_23")][:2] == [
        "alpha1 = alpha2",
        "beta1 = phi2",
    ]


def test_flips():
    assert edge_face_flips(4) == ("w4", "v1")
    assert edge_face_flips(1, 2) == ("w1", "v2", "w2", "v3")
    assert is_edge_face_flip(("w4", "v1"))
    assert not is_edge_face_flip(("w4",))
    a = family_angles("voss", rng=np.random.default_rng(4))
    twice = flip_wings(flip_wings(a, ("w2", "v3")), ("w2", "v3"))
    assert twice.max_difference(a) < 1e-15
    with pytest.raises(InfeasibleParameters):
        flip_wings(a, ("x1",))


def test_family_parameter_checks():
    with pytest.raises(InfeasibleParameters):
        family_angles("voss", {"alpha": [1.0, 1.0, 1.0, 1.0]})
    with pytest.raises(InfeasibleParameters):
        family_angles("symmetric_12_43", {"alpha12": [1.0, 1.0]})
    with pytest.raises(InfeasibleParameters):
        family_angles("nope")
    with pytest.raises(InfeasibleParameters):
        family_angles("sign_flip", base="sign_flip")


def test_quad_from_angles():
    A = quad_from_angles([math.pi / 2] * 4)
    np.testing.assert_allclose(A[:, :2], [[0, 0], [1, 0], [1, 1], [0, 1]], atol=1e-15)
    with pytest.raises(InfeasibleParameters):
        quad_from_angles([1.0, 1.0, 1.0, 1.0])


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_realization_reproduces_the_angles(seed):
    rng = np.random.default_rng(seed)
    a = family_angles("voss", rng=rng)
    try:
        mesh, om1 = find_realization(a, rng)
    except NoRealRealization:
        assume(False)
    back = extract_angles(mesh)
    assert back.max_difference(a) < 1e-9
    assert back.signed_omega[0] == pytest.approx(om1)


def test_unrealizable_dihedral():
    a = AngleSet([math.pi / 2] * 4, [0.3] * 4, [2.8] * 4, [0.3] * 4)
    with pytest.raises(NoRealRealization):
        realize_mesh(a, 1.0)


def test_angle_documents_round_trip():
    exact = random_exact_family("symmetric_12_43", np.random.default_rng(5))
    doc = load_angles(save_angles(exact, {"family": "symmetric_12_43"}))
    assert doc.exact == exact
    assert doc.meta == {"family": "symmetric_12_43"}
    assert doc.angles.max_difference(exact.to_angle_set()) == 0.0
    floats = family_angles("voss", rng=np.random.default_rng(6))
    again = load_angles(save_angles(floats))
    assert again.exact is None and again.angles.max_difference(floats) == 0.0


def test_angle_document_errors():
    good = json.loads(save_angles(random_exact_family("voss", np.random.default_rng(7))))
    bad = dict(good, schema="kokotsakis-angles/0")
    with pytest.raises(SchemaVersionMismatch):
        load_angles(json.dumps(bad))
    bad = json.loads(json.dumps(good))
    bad["half_tangents"]["beta"][0] = "7/3"
    with pytest.raises(ParseError):
        load_angles(json.dumps(bad))
    bad = json.loads(json.dumps(good))
    bad["phi"][1] = "x"
    with pytest.raises(ParseError):
        load_angles(json.dumps(bad))
