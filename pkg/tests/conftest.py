import numpy as np
import pytest

from kokotsakis.angles import AngleSet, family_angles, find_realization, random_quad_angles
from kokotsakis.flow import corner_margin, integrate_flow
from kokotsakis.mesh import random_planar_mesh

_CRITERIA = {}


def record_criterion(name, ok, detail):
    _CRITERIA[name] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda s: int(s[1:])):
        ok, detail = _CRITERIA[name]
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}: {detail}")


@pytest.fixture
def criterion():
    return record_criterion


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def well_conditioned_mesh(rng, n=4, margin=0.3):
    """Planar-face mesh whose corners stay away from the singular set."""
    while True:
        m = random_planar_mesh(n, rng)
        if corner_margin(m) >= margin:
            return m


def random_angle_set(rng, lo=0.35, hi=np.pi - 0.35):
    alpha = random_quad_angles(rng)
    return AngleSet(alpha, *rng.uniform(lo, hi, (3, 4)))


def regular_voss_mesh(duration=1.0, tol=1e-9, first_seed=0):
    """First seeded Voss realization whose flow stays regular for ``duration``.

    Some draws run into a corner where the flexion field is singular before
    ``duration``; those trajectories are truncated by design and skipped.
    """
    for seed in range(first_seed, first_seed + 50):
        rng = np.random.default_rng(seed)
        mesh, _ = find_realization(family_angles("voss", rng=rng), rng)
        traj = integrate_flow(mesh, duration, tol=tol)
        if not traj.truncated:
            return seed, mesh, traj
    raise RuntimeError("no regular Voss trajectory among 50 seeds")


@pytest.fixture(scope="session")
def voss_flow():
    return regular_voss_mesh()
