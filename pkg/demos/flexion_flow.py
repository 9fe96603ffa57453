"""Follow the flexion field.  On a Voss mesh chi stays at 1 and the faces stay
rigid; on a generic mesh chi drifts at the rate chi'."""
import numpy as np

from kokotsakis import chi_higher_derivatives, family_angles, find_realization, integrate_flow
from kokotsakis.flow import corner_margin
from kokotsakis.mesh import face_angles, random_planar_mesh

rng = np.random.default_rng(0)
voss, _ = find_realization(family_angles("voss", rng=rng), rng)
traj = integrate_flow(voss, 1.0, t_eval=np.linspace(0, 1, 6))
print("Voss mesh along the flow")
ref = face_angles(voss)
for s in traj.states:
    drift = np.abs(face_angles(s.mesh) - ref).max()
    print(f"  t = {s.time:.1f}  chi - 1 = {s.chi - 1: .2e}  face-angle drift = {drift:.1e}")

rep = chi_higher_derivatives(voss, K=4)
print("  derivatives vanish within their error bars:", [bool(rep.vanishes(k)) for k in range(1, 5)])

# a generic mesh kept away from the corners where the field is singular
mesh = random_planar_mesh(4, rng)
while corner_margin(mesh) < 0.3:
    mesh = random_planar_mesh(4, rng)
print("\ngeneric mesh")
rep = chi_higher_derivatives(mesh, K=4)
for k in range(5):
    print(f"  chi^({k}) = {rep.values[k]: .8g}  +- {rep.errors[k]:.1e}  [{rep.methods[k]}]")
traj = integrate_flow(mesh, 0.1, t_eval=[0.05, 0.1])
print("  chi after t = 0.05, 0.1:", [round(s.chi, 6) for s in traj.states])
