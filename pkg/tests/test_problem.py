import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from junctionhjb import (
    AffineCoef,
    ControlAtom,
    Domain,
    JunctionProblem,
    JunctionShape,
    VelocityCost,
    constant_atom,
    controllability_radius,
    convexity_gap,
    disc_family,
    estimate_regularity,
    interface_atom,
    interface_point,
    mixed_atom,
    nonexit_set,
    normal_span_radius,
    pair_mixtures,
    velocity_ball_radius,
    velocity_cost_set,
    zero_normal_mixing,
)
from junctionhjb.errors import EmptyControlSetError, UnknownAtomError
from junctionhjb.problem import cost_floor, law_atom_plane, resolve_law_atom

ORIGIN = interface_point(0.0)
DOMAIN = Domain(-2.0, 2.0, 2.0)


def make_problem(atoms1, atoms2=None, lam=1.0, convexify=True, interface=(), **decl):
    atoms2 = atoms2 if atoms2 is not None else [constant_atom("b0", 0.0, 1.0, 0.0),
                                                constant_atom("b1", 0.0, -1.0, 0.0)]
    decl.setdefault("m_f", 5.0)
    decl.setdefault("m_ell", 5.0)
    decl.setdefault("l_f", 1.0)
    return JunctionProblem(JunctionShape(2), (tuple(atoms1), tuple(atoms2)),
                           lam=lam, interface_controls=tuple(interface),
                           convexify=convexify, **decl)


def test_velocity_cost_set_singleton():
    prob = make_problem([constant_atom("a", 1.0, 0.0, 2.0)])
    assert velocity_cost_set(prob, 1, ORIGIN) == [VelocityCost(1.0, 0.0, 2.0, "a")]


def test_velocity_cost_set_disc_family():
    m = 16
    prob = make_problem(disc_family("d", 0.5, 3.0, m))
    pts = velocity_cost_set(prob, 1, ORIGIN)
    assert len(pts) == m
    for p in pts:
        assert math.hypot(p.f0, p.fi) == pytest.approx(0.5, abs=1e-12)
        assert p.ell == 3.0


def test_empty_control_set_rejected():
    with pytest.raises(EmptyControlSetError):
        make_problem([])


def test_nonexit_sign_filter():
    atoms = [constant_atom("m", 0.0, -1.0, 0.0), constant_atom("z", 1.0, 0.0, 0.0),
             constant_atom("p", 0.0, 2.0, 0.0)]
    prob = make_problem(atoms, convexify=False)
    kept = {p.atom_id for p in nonexit_set(prob, 1, ORIGIN)}
    assert kept == {"z", "p"}


def test_nonexit_empty_when_all_outgoing():
    prob = make_problem([constant_atom("m1", 0.0, -1.0, 0.0),
                         constant_atom("m2", 1.0, -2.0, 0.0)], convexify=False)
    assert nonexit_set(prob, 1, ORIGIN) == []


def test_nonexit_convexified_contains_zero_normal_mixture():
    prob = make_problem([constant_atom("up", 0.0, 1.0, 0.0),
                         constant_atom("down", 0.0, -1.0, 0.0)], convexify=True)
    pts = nonexit_set(prob, 1, ORIGIN)
    mixed = [p for p in pts if p.atom_id.startswith("mix")]
    assert len(mixed) == 1
    # theta = 1/2 by direct substitution in the mixing formula
    assert mixed[0].fi == 0.0
    assert mixed[0].f0 == pytest.approx(0.0, abs=1e-15)


def test_nonexit_subset_of_full_set_without_convexify():
    prob = make_problem([constant_atom("a", 1.0, -0.5, 1.0),
                         constant_atom("b", 0.0, 0.5, 2.0)], convexify=False)
    full = velocity_cost_set(prob, 1, ORIGIN)
    for p in nonexit_set(prob, 1, ORIGIN):
        assert p in full


def test_pair_mixture_example():
    pts = [VelocityCost(1.0, 1.0, 0.0, "a"), VelocityCost(-1.0, -1.0, 2.0, "b")]
    (mix,) = pair_mixtures(pts)
    assert mix == VelocityCost(0.0, 0.0, 1.0, "mix(a,b)")


def test_mixing_one_sided_is_empty():
    assert pair_mixtures([VelocityCost(0, 1.0, 0), VelocityCost(0, 2.0, 0)]) == []


def test_zero_normal_mixing_passes_native_through():
    native = VelocityCost(3.0, 0.0, 1.0, "n")
    out = zero_normal_mixing([native, VelocityCost(0, 1.0, 0, "u")])
    assert out == [native]


@given(st.floats(1e-3, 10), st.floats(-10, -1e-3), st.floats(-5, 5), st.floats(-5, 5),
       st.floats(-5, 5), st.floats(-5, 5))
def test_mixing_zeroes_normal_component_exactly(fa, fb, f0a, f0b, la, lb):
    (mix,) = pair_mixtures([VelocityCost(f0a, fa, la, "a"), VelocityCost(f0b, fb, lb, "b")])
    assert mix.fi == 0.0


def test_interface_atom_normal_component_structurally_zero():
    atom = interface_atom("hold", AffineCoef(1.0, 0.5), 0.3)
    for x0 in (-3.0, 0.0, 7.5):
        f0, fi = atom.dynamics(interface_point(x0))
        assert fi == 0.0
        assert f0 == 1.0 + 0.5 * x0


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError, match="disjoint"):
        make_problem([constant_atom("a", 0, 1, 0)], [constant_atom("a", 0, 1, 0)])


def test_mixed_atom_and_law_resolution():
    prob = make_problem([constant_atom("up", 1.0, 1.0, 0.0),
                         constant_atom("down", -1.0, -1.0, 2.0)])
    atom = resolve_law_atom(prob, "mix(up,down)")
    f0, fi = atom.dynamics(ORIGIN)
    assert (f0, fi) == (0.0, 0.0)
    assert atom.cost(ORIGIN) == 1.0
    assert law_atom_plane(prob, "mix(up,down)") == 1
    with pytest.raises(UnknownAtomError):
        resolve_law_atom(prob, "nope")


def test_mixed_atom_requires_convexify_and_same_plane():
    prob = make_problem([constant_atom("up", 0, 1, 0), constant_atom("down", 0, -1, 0)],
                        convexify=False)
    with pytest.raises(ValueError, match="convexify"):
        mixed_atom(prob, "up", "down")
    prob2 = make_problem([constant_atom("up", 0, 1, 0)], [constant_atom("dn", 0, -1, 0)])
    with pytest.raises(ValueError, match="same plane"):
        mixed_atom(prob2, "up", "dn")


# ---------------------------------------------------------------------------
# assumption checkers


def test_regularity_constant_dynamics():
    prob = make_problem([constant_atom("a", 1.0, 0.0, 3.0)], m_f=1.0, m_ell=3.0, l_f=0.0)
    rep = estimate_regularity(prob, DOMAIN, n_samples=100)
    assert rep.m_f_est == 1.0
    assert rep.m_ell_est == 3.0
    assert rep.l_f_est == 0.0
    assert rep.ok


def test_regularity_affine_estimates_approach_analytic_values():
    # f = (x0, 0) on |x0| <= 2: sup |f| = 2, Lipschitz constant 1 (exact by linearity)
    atom = ControlAtom("a", AffineCoef(0.0, 1.0, 0.0), 0.0, 0.0)
    prob = make_problem([atom], m_f=2.0, m_ell=5.0, l_f=1.0)
    rep = estimate_regularity(prob, DOMAIN, n_samples=4000, seed=3)
    assert 1.9 <= rep.m_f_est <= 2.0 + 1e-9
    assert 0.9 <= rep.l_f_est <= 1.0 + 1e-9
    assert rep.ok


def test_regularity_flags_underdeclared_bound():
    prob = make_problem([constant_atom("a", 1.0, 0.0, 3.0)], m_f=0.5, m_ell=3.0, l_f=0.0)
    rep = estimate_regularity(prob, DOMAIN, n_samples=50)
    assert any("velocity bound" in v for v in rep.violations)


def nearest_atom_gap(points):
    """Independent oracle: exhaustive max-over-pair-midpoints nearest-atom search."""
    arr = np.array([p.pair_vector() for p in points])
    worst = 0.0
    for i in range(len(arr)):
        for j in range(i + 1, len(arr)):
            mid = 0.5 * (arr[i] + arr[j])
            worst = max(worst, min(np.linalg.norm(arr - mid, axis=1)))
    return worst


def test_convexity_gap_identical_atoms():
    prob = make_problem([constant_atom("a", 1, 0, 0), constant_atom("b", 1, 0, 0)])
    assert convexity_gap(prob, 1, ORIGIN) == 0.0


def test_convexity_gap_two_opposite_atoms():
    prob = make_problem([constant_atom("a", 1, 0, 0), constant_atom("b", -1, 0, 0)])
    gap = convexity_gap(prob, 1, ORIGIN)
    assert gap == pytest.approx(1.0, abs=1e-12)
    assert gap == pytest.approx(nearest_atom_gap(velocity_cost_set(prob, 1, ORIGIN)), abs=0)


def test_convexity_gap_shrinks_with_dense_solid_disc():
    def solid_disc(n_r, n_th):
        atoms = []
        for i in range(1, n_r + 1):
            r = i / n_r
            for k in range(n_th):
                th = 2 * math.pi * k / n_th
                atoms.append(constant_atom(f"s{i}_{k}", r * math.cos(th), r * math.sin(th), 1.0))
        atoms.append(constant_atom("c", 0.0, 0.0, 1.0))
        return atoms

    coarse = make_problem(solid_disc(2, 6))
    dense = make_problem(solid_disc(6, 24))
    g_coarse = convexity_gap(coarse, 1, ORIGIN)
    g_dense = convexity_gap(dense, 1, ORIGIN)
    assert g_dense < g_coarse
    assert g_dense < 0.2
    assert g_dense == pytest.approx(nearest_atom_gap(velocity_cost_set(dense, 1, ORIGIN)), abs=0)


def test_velocity_ball_radius_disc():
    m = 64
    prob = make_problem(disc_family("d", 1.0, 0.0, m))
    r = velocity_ball_radius(prob, ORIGIN)[0]
    # inscribed-circle radius of the regular m-gon
    assert r == pytest.approx(math.cos(math.pi / m), abs=1e-12)


def test_velocity_ball_radius_degenerate_cases():
    prob = make_problem([constant_atom("a", 1.0, 0.0, 0.0)])
    assert velocity_ball_radius(prob, ORIGIN)[0] == 0.0
    # square rotated 45 degrees: facet distance sqrt(2)/2
    sq = [constant_atom("e", 1, 0, 0), constant_atom("w", -1, 0, 0),
          constant_atom("n", 0, 1, 0), constant_atom("s", 0, -1, 0)]
    prob = make_problem(sq)
    assert velocity_ball_radius(prob, ORIGIN)[0] == pytest.approx(math.sqrt(2) / 2, abs=1e-12)


def test_normal_span_radius_cases():
    prob = make_problem([constant_atom("a", 0, -2, 0), constant_atom("b", 0, 3, 0)])
    assert normal_span_radius(prob, ORIGIN)[0] == 2.0
    prob = make_problem([constant_atom("a", 0, 1, 0), constant_atom("b", 0, 2, 0)])
    assert normal_span_radius(prob, ORIGIN)[0] == 0.0
    prob = make_problem(disc_family("d", 1.0, 0.0, 64))
    assert normal_span_radius(prob, ORIGIN)[0] == pytest.approx(1.0, abs=1e-12)


def test_ball_radius_never_exceeds_normal_span():
    rng = np.random.default_rng(0)
    for _ in range(20):
        atoms = [constant_atom(f"r{i}", float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2)),
                               0.0) for i in range(6)]
        prob = make_problem(atoms)
        ball = velocity_ball_radius(prob, ORIGIN)
        span = normal_span_radius(prob, ORIGIN)
        for b, s in zip(ball, span):
            assert b <= s + 1e-12


def test_controllability_radius_uniform_dynamics():
    prob = make_problem(disc_family("d", 1.0, 0.0, 16), disc_family("e", 1.0, 0.0, 16))
    assert controllability_radius(prob, DOMAIN, mode="normal") == DOMAIN.xi_max
    assert controllability_radius(prob, DOMAIN, mode="ball") == DOMAIN.xi_max


def test_controllability_radius_linear_shrink():
    # normal span delta(xi) = 1 - xi/2 crosses delta0/2 = 1/2 at xi = 1
    up = ControlAtom("u", 0.0, AffineCoef(1.0, 0.0, -0.5), 0.0)
    down = ControlAtom("v", 0.0, AffineCoef(-1.0, 0.0, 0.5), 0.0)
    prob = make_problem([up, down], [ControlAtom("u2", 0.0, AffineCoef(1.0, 0.0, -0.5), 0.0),
                                     ControlAtom("v2", 0.0, AffineCoef(-1.0, 0.0, 0.5), 0.0)])
    r = controllability_radius(prob, DOMAIN, mode="normal")
    assert r == pytest.approx(1.0, abs=2 * DOMAIN.xi_max / 40)


def test_controllability_radius_degenerate_interface():
    up = ControlAtom("u", 0.0, AffineCoef(0.0, 0.0, 1.0), 0.0)
    down = ControlAtom("v", 0.0, AffineCoef(0.0, 0.0, -1.0), 0.0)
    prob = make_problem([up, down])
    assert controllability_radius(prob, DOMAIN, mode="normal") == 0.0


def test_cost_floor():
    prob = make_problem([ControlAtom("a", 0.0, 1.0, AffineCoef(1.0, 1.0, 0.0)),
                         constant_atom("b", 0, -1, 0.5)])
    assert cost_floor(prob, DOMAIN) == -1.0  # affine cost at x0 = -2
