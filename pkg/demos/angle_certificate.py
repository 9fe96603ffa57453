"""Decide flexibility from the face angles alone.

The four vertex relations are squared into polynomials in the dihedral
cosines, t2 and t4 are eliminated, and the resultant in t3 is sampled at
integer t1.  With rational half tangents the arithmetic is exact and a
flexible family gives exact zeros.
"""
from fractions import Fraction

import numpy as np

from kokotsakis import flex_certificate, random_exact_family
from kokotsakis.angles import FAMILIES, ExactAngles, Trig

for kind in FAMILIES:
    exact = random_exact_family(kind, np.random.default_rng(6))
    cert = flex_certificate(exact, samples=range(-10, 11))
    tangents = [str(t.half_tangent()) for t in exact.beta]
    print(f"{kind:16s} exact: {cert.verdict:8s} beta half tangents {tangents}")

# The same draws in floating point.  The normalized resultant is a sum of
# large terms that cancel; on some draws the rounding of the angles leaves
# residues far above the threshold.
print("\nfloating point, 10 exact Voss draws rounded to floats:")
for seed in range(10):
    exact = random_exact_family("voss", np.random.default_rng(seed))
    cert = flex_certificate(exact.to_angle_set())
    print(f"  seed {seed}: {cert.verdict:8s} max |value| = {cert.max_value:.1e}")

# Nudge one angle off the family and the exact certificate sees it at once.
exact = random_exact_family("voss", np.random.default_rng(6))
beta = list(exact.beta)
beta[0] = Trig.from_half_tangent(beta[0].half_tangent() + Fraction(1, 10**6))
nudged = ExactAngles(exact.alpha, tuple(beta), exact.gamma, exact.phi)
print("\nnudged by 1e-6 in one half tangent:", flex_certificate(nudged, samples=range(-3, 4)).verdict)
