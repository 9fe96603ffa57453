"""The planar picture: each wing plane meets the plane of the middle face in a
line, neighbouring lines meet in points B, and flexibility becomes an
incidence statement about the A and B points."""
import numpy as np

from kokotsakis import build_trace_configuration, ceva_menelaus_product, chi, family_angles, find_realization
from kokotsakis.incidence import flexibility_via_incidence, geometric_condition_I, witness_csv
from kokotsakis.mesh import random_planar_mesh

rng = np.random.default_rng(3)
for n in (3, 4, 5):
    mesh = random_planar_mesh(n, rng)
    config = build_trace_configuration(mesh)
    print(f"n = {n}: product of (1 - t)/t = {ceva_menelaus_product(config): .6f}, (-1)^n / chi = {(-1) ** n / chi(mesh).value: .6f}")

voss, _ = find_realization(family_angles("voss", rng=rng), rng)
verdict = flexibility_via_incidence(voss)
print(f"\nVoss mesh: condition {verdict.condition} holds = {verdict.flexible}, residual {verdict.result.residual:.1e}")
print(f"  Desargues form residual {verdict.result.desargues:.1e}; agrees with chi: {verdict.agrees}")

config = build_trace_configuration(voss)
print("\nwitness points (plane coordinates):")
print(witness_csv(config, geometric_condition_I(config).chain))
