"""Shared problem builders for the test suite."""

from __future__ import annotations

import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("ci", deadline=None, derandomize=True)
hypothesis.settings.load_profile("ci")

from junctionhjb import (
    ControlAtom,
    JunctionGrid,
    JunctionProblem,
    JunctionShape,
    constant_atom,
    disc_family,
    value_iteration,
)


def two_plane_disc_problem(c1=1.0, c2=0.0, n_samples=64, lam=1.0, convexify=True,
                           radius=1.0) -> JunctionProblem:
    """Two half-planes with full disc dynamics: cost c1 in plane 1, c2 in plane 2."""
    atoms1 = disc_family("d1", radius, c1, n_samples)
    atoms2 = disc_family("d2", radius, c2, n_samples)
    return JunctionProblem(JunctionShape(2), (tuple(atoms1), tuple(atoms2)),
                           lam=lam, m_f=radius, m_ell=max(abs(c1), abs(c2), 1e-9),
                           l_f=0.0, l_ell=0.0, convexify=convexify)


def two_plane_closed_form(xi: np.ndarray | float, c1=1.0, c2=0.0, lam=1.0, radius=1.0):
    """Value of the two-plane disc problem on plane 1 by one-dimensional reduction."""
    return c2 / lam + (c1 - c2) * (1.0 - np.exp(-lam * np.asarray(xi) / radius)) / lam


def random_convexified_problem(rng: np.random.Generator, n_planes=None,
                               with_interface=False) -> JunctionProblem:
    """Random constant-dynamics problem with straddling normal velocities per plane."""
    n = int(n_planes if n_planes is not None else rng.integers(2, 4))
    plane_controls = []
    k = 0
    for _ in range(n):
        atoms = []
        n_atoms = int(rng.integers(3, 7))
        for _ in range(n_atoms):
            atoms.append(constant_atom(f"a{k}", float(rng.uniform(-2, 2)),
                                       float(rng.uniform(-2, 2)), float(rng.uniform(-1, 2))))
            k += 1
        # guarantee straddling normal components (normal controllability)
        atoms.append(constant_atom(f"a{k}", float(rng.uniform(-1, 1)),
                                   float(rng.uniform(0.3, 2.0)), float(rng.uniform(-1, 2))))
        atoms.append(constant_atom(f"a{k + 1}", float(rng.uniform(-1, 1)),
                                   float(rng.uniform(-2.0, -0.3)), float(rng.uniform(-1, 2))))
        k += 2
        plane_controls.append(tuple(atoms))
    iface = ()
    if with_interface:
        iface = tuple(ControlAtom(f"i{j}", float(rng.uniform(-1, 1)), 0.0,
                                  float(rng.uniform(-1, 2)), interface=True)
                      for j in range(int(rng.integers(1, 3))))
    m_f = max(float(np.hypot(*a.dynamics(_origin()))) for atoms in plane_controls for a in atoms)
    m_f = max(m_f, *(abs(float(a.f0)) for a in iface)) if iface else m_f
    m_ell = max(abs(float(a.ell)) for atoms in (*plane_controls, iface) for a in atoms)
    return JunctionProblem(JunctionShape(n), tuple(plane_controls), lam=1.0,
                           m_f=m_f, m_ell=m_ell, l_f=0.0, l_ell=0.0,
                           interface_controls=iface, convexify=True)


def _origin():
    from junctionhjb import interface_point

    return interface_point(0.0)


CRIT2_GRID = JunctionGrid(2, -2.0, 2.0, 201, 2.0, 101)
CRIT2_DT = 0.01


@pytest.fixture(scope="session")
def crit2_problem():
    return two_plane_disc_problem()


@pytest.fixture(scope="session")
def crit2_field(crit2_problem):
    return value_iteration(crit2_problem, CRIT2_GRID, CRIT2_DT, tol=1e-9)


@pytest.fixture(scope="session")
def crit2_field_refined(crit2_problem):
    grid = JunctionGrid(2, -2.0, 2.0, 401, 2.0, 201)
    return value_iteration(crit2_problem, grid, CRIT2_DT / 2, tol=1e-9)
