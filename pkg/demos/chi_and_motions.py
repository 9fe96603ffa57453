"""Is a mesh infinitesimally flexible?  Compute chi on a generic mesh and on
a Voss mesh, and watch the corner motions fail (or not) to close up."""
import numpy as np

from kokotsakis import chi, family_angles, find_realization, is_infinitesimally_flexible
from kokotsakis.infinitesimal import corner_motions
from kokotsakis.mesh import random_planar_mesh

rng = np.random.default_rng(1)

generic = random_planar_mesh(4, rng)
x = chi(generic)
print("generic quadrangle mesh")
print("  corner ratios:", np.round(x.factors, 4))
print(f"  chi = {x.value:.6f} -> flexible: {is_infinitesimally_flexible(generic).flexible}")

# Each corner moves in a one-parameter family; chaining the scales around the
# middle face multiplies them by chi, so the loop only closes when chi = 1.
mot = corner_motions(generic)
print(f"  scale picked up after a full turn: {mot[-1].lam / x.denominators[-1] * x.numerators[0] / mot[0].lam:.6f}")

voss_angles = family_angles("voss", rng=rng)
voss, omega1 = find_realization(voss_angles, rng)
print("\nVoss mesh (gamma = alpha, phi = beta at every vertex)")
print(f"  realized from omega1 = {omega1:.4f}")
print(f"  chi = {chi(voss).value:.15f}")
