"""Hamiltonian evaluators for junction control problems.

All Hamiltonians are finite maxima of affine functions of the covector:
H(x, p) = max over controls of (-p . f(x,a) - ell(x,a)). On the interface the
restricted, interface and tangential variants select controls by the sign of
their normal velocity component. The shift-minimizer computation is exact
(slope sorting on the piecewise-linear function of the normal shift), so the
coincidence of the shifted, restricted and tangential Hamiltonians is testable
at tight tolerance rather than by 1-D numerical search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyControlSetError, InvalidPointError, NotCoerciveError
from .geometry import JunctionPoint
from .problem import (
    Domain,
    JunctionProblem,
    VelocityCost,
    interface_velocity_cost_set,
    nonexit_set,
    normal_span_radius,
    pair_mixtures,
    velocity_cost_set,
    zero_normal_mixing,
    controllability_radius,
)


@dataclass(frozen=True)
class Covector:
    """Covector in intrinsic coordinates: p0 along the interface, pi along the plane normal."""

    p0: float
    pi: float

    def shifted(self, d: float) -> "Covector":
        return Covector(self.p0, self.pi + d)


@dataclass(frozen=True)
class ShiftInterval:
    """Flat-bottom interval of normal covector shifts minimizing the plane Hamiltonian."""

    delta_min: float
    delta_max: float
    value: float


def _support(points: Sequence[VelocityCost], p: Covector) -> float:
    if not points:
        raise EmptyControlSetError("Hamiltonian over an empty control set")
    return max(-p.p0 * q.f0 - p.pi * q.fi - q.ell for q in points)


def hamiltonian(problem: JunctionProblem, plane: int, x: JunctionPoint, p: Covector) -> float:
    """Plane Hamiltonian: exact max of -p.f - ell over the plane's atoms.

    Mixing never changes this value (a max of a linear form over a convex hull
    is attained at a generator), so the raw atom set is used.
    """
    return _support(velocity_cost_set(problem, plane, x), p)


def hamiltonian_nonexit(problem: JunctionProblem, plane: int, x: JunctionPoint, p: Covector) -> float:
    """Restricted Hamiltonian at an interface point: max over controls with fi >= 0.

    Includes the zero-normal pair mixtures when the problem is convexified.
    Raises if the restricted set is empty (normal controllability fails at x).
    """
    pts = nonexit_set(problem, plane, x)
    if not pts:
        raise EmptyControlSetError(
            f"no control with nonnegative normal velocity in plane {plane} at x0={x.x0}")
    return _support(pts, p)


def interface_hamiltonian(problem: JunctionProblem, x: JunctionPoint,
                          covectors: Sequence[Covector]) -> float:
    """Interface Hamiltonian: max over planes of the restricted Hamiltonians.

    The covectors must share the tangential component p0 (it is geometrically
    plane-independent); with interface controls present their own Hamiltonian
    max(-f0*p0 - ell0) joins the max.
    """
    if x.xi != 0.0:
        raise InvalidPointError("the interface Hamiltonian is only defined on the interface")
    if len(covectors) != problem.shape.n_planes:
        raise ValueError("one covector per plane is required")
    p0 = covectors[0].p0
    if any(c.p0 != p0 for c in covectors):
        raise ValueError("tangential components of the covectors must agree")
    value = max(hamiltonian_nonexit(problem, i, x, c)
                for i, c in zip(problem.shape.planes, covectors))
    if problem.interface_controls:
        value = max(value, _support(interface_velocity_cost_set(problem, x), Covector(p0, 0.0)))
    return value


def tangential_hamiltonian_plane(problem: JunctionProblem, plane: int, x: JunctionPoint,
                                 p0: float) -> float:
    """Tangential Hamiltonian of one plane: max over zero-normal controls.

    Zero-normal controls are the native fi == 0 atoms together with all
    pairwise mixtures (mixing is always applied here; the coincidence with the
    shift-minimized plane Hamiltonian needs the convex closure).
    """
    if x.xi != 0.0:
        raise InvalidPointError("the tangential Hamiltonian is only defined on the interface")
    pts = zero_normal_mixing(velocity_cost_set(problem, plane, x))
    if not pts:
        raise EmptyControlSetError(
            f"no zero-normal control in plane {plane} at x0={x.x0}: "
            "no native fi=0 atom and no pair straddling fi=0")
    return _support(pts, Covector(p0, 0.0))


def tangential_hamiltonian(problem: JunctionProblem, x: JunctionPoint, p0: float) -> float:
    """Tangential Hamiltonian of the junction: max over planes, and interface controls if any."""
    value = max(tangential_hamiltonian_plane(problem, i, x, p0) for i in problem.shape.planes)
    if problem.interface_controls:
        value = max(value, _support(interface_velocity_cost_set(problem, x), Covector(p0, 0.0)))
    return value


def shift_minimizers(problem: JunctionProblem, plane: int, x: JunctionPoint,
                     p: Covector) -> ShiftInterval:
    """Exact minimizer interval of d -> H(x, p + d e_normal) for one plane.

    The function is a finite max of affine functions of d with slopes -fi; the
    minimum and its flat-bottom interval are computed from pairwise
    intersections of the active lines, not by numerical search. Mixing is
    applied first so the minimum value coincides with the tangential
    Hamiltonian. Raises when the slopes are one-sided (no minimizer).
    """
    pts = velocity_cost_set(problem, plane, x)
    if x.xi == 0.0:
        pts = pts + pair_mixtures(pts)
    # line for atom a: g_a(d) = alpha_a + beta_a * d
    alpha = np.array([-p.p0 * q.f0 - p.pi * q.fi - q.ell for q in pts])
    beta = np.array([-q.fi for q in pts])
    if beta.min() >= 0 or beta.max() <= 0:
        raise NotCoerciveError(
            "normal-shift minimization is unbounded: atom normal velocities are one-sided")
    # exact minimum by linear-programming duality: the optimal dual puts weight
    # on a single zero-slope line or on a pair of opposite-slope lines mixed to
    # slope zero, so the minimum is a finite max over those combinations.
    best = -math.inf
    flat = alpha[beta == 0.0]
    if flat.size:
        best = float(flat.max())
    a_pos, b_pos = alpha[beta > 0], beta[beta > 0]
    a_neg, b_neg = alpha[beta < 0], beta[beta < 0]
    t = -b_neg[None, :] / (b_pos[:, None] - b_neg[None, :])
    pair_values = t * a_pos[:, None] + (1.0 - t) * a_neg[None, :]
    best = max(best, float(pair_values.max()))
    # flat-bottom interval: g_a(d) <= best for every a
    lo = float(np.max((best - a_neg) / b_neg))
    hi = float(np.min((best - a_pos) / b_pos))
    if lo > hi:  # rounding can cross the endpoints of a degenerate interval
        lo = hi = 0.5 * (lo + hi)
    return ShiftInterval(lo, hi, best)


def relaxed_generators(problem: JunctionProblem, plane: int, x: JunctionPoint) -> list[VelocityCost]:
    """Finite generator set of the relaxed velocity-cost hull attached to one plane.

    At an interface point the relaxed set is the convex hull of the plane's
    nonexiting pairs together with the zero-normal pairs of every other plane
    (and the interface pairs when present); the hull is represented implicitly
    by these generators.
    """
    if x.xi != 0.0:
        raise InvalidPointError("the relaxed construction applies at interface points")
    gens = list(nonexit_set(problem, plane, x))
    if not problem.convexify:
        gens += pair_mixtures(velocity_cost_set(problem, plane, x))
    for j in problem.shape.planes:
        if j != plane:
            gens += zero_normal_mixing(velocity_cost_set(problem, j, x))
    gens += interface_velocity_cost_set(problem, x)
    return gens


def admissible_interface_set(problem: JunctionProblem, x: JunctionPoint) -> list[VelocityCost]:
    """Velocity-cost pairs available at an interface point: the union over planes of the
    nonexiting sets plus the interface pairs."""
    pts: list[VelocityCost] = []
    for i in problem.shape.planes:
        pts += nonexit_set(problem, i, x)
    pts += interface_velocity_cost_set(problem, x)
    return pts


# ---------------------------------------------------------------------------
# regularity diagnostics


@dataclass(frozen=True)
class HamiltonianRegularityReport:
    """Worst sampled violation of each structural Hamiltonian inequality."""

    lipschitz_x: float
    lipschitz_p: float
    coercivity: float
    monotonicity: float
    pseudo_coercivity: float
    interface_lipschitz_x: float
    delta: float
    tube_radius: float

    def max_violation(self) -> float:
        return max(self.lipschitz_x, self.lipschitz_p, self.coercivity,
                   self.monotonicity, self.pseudo_coercivity, self.interface_lipschitz_x)


def regularity_report(problem: JunctionProblem, domain: Domain, n_samples: int = 60,
                      seed: int = 0) -> HamiltonianRegularityReport:
    """Sampled check of the Hamiltonian regularity and coercivity inequalities.

    Uses the declared constants (velocity bound, Lipschitz constants) and the
    estimated normal-controllability margin delta. All violations should be
    ~0 (below 1e-9) for problems whose declared constants are honest; a
    positive violation pinpoints either a dishonest declaration or a genuinely
    irregular problem.
    """
    rng = np.random.default_rng(seed)
    l_ell = problem.l_ell if problem.l_ell is not None else 0.0
    c_m = max(problem.m_f, problem.m_ell)
    x0s = np.linspace(domain.x0_min, domain.x0_max, 9)
    delta = min(min(normal_span_radius(problem, JunctionPoint(1, float(u), 0.0))) for u in x0s)
    tube = controllability_radius(problem, domain, mode="normal")
    big_m = problem.l_f * (1.0 + 2.0 * problem.m_f / delta) if delta > 0 else math.inf

    def omega(t: float) -> float:
        return l_ell * t + (2.0 * problem.m_ell * problem.l_f / delta * t if delta > 0 else 0.0)

    viol_lx = viol_lp = viol_co = viol_mono = viol_pseudo = viol_ix = 0.0
    for _ in range(n_samples):
        plane = int(rng.integers(1, problem.shape.n_planes + 1))
        xa = JunctionPoint(plane, float(rng.uniform(domain.x0_min, domain.x0_max)),
                           float(rng.uniform(0.0, domain.xi_max)))
        xb = JunctionPoint(plane, float(rng.uniform(domain.x0_min, domain.x0_max)),
                           float(rng.uniform(0.0, domain.xi_max)))
        p = Covector(float(rng.uniform(-3, 3)), float(rng.uniform(-3, 3)))
        q = Covector(float(rng.uniform(-3, 3)), float(rng.uniform(-3, 3)))
        dist = math.hypot(xa.x0 - xb.x0, xa.xi - xb.xi)
        pnorm = math.hypot(p.p0, p.pi)
        ha, hb = hamiltonian(problem, plane, xa, p), hamiltonian(problem, plane, xb, p)
        viol_lx = max(viol_lx, abs(ha - hb) - (problem.l_f * dist * pnorm + l_ell * dist))
        hq = hamiltonian(problem, plane, xa, q)
        viol_lp = max(viol_lp, abs(ha - hq) - problem.m_f * math.hypot(p.p0 - q.p0, p.pi - q.pi))
        if xa.xi <= tube and delta > 0:
            viol_co = max(viol_co, (delta / 2.0) * abs(p.pi) - c_m * (1.0 + abs(p.p0)) - ha)
        # interface-only inequalities
        g = JunctionPoint(plane, xa.x0, 0.0)
        gb = JunctionPoint(plane, xb.x0, 0.0)
        lo, hi = sorted((p.pi, q.pi))
        h_lo = hamiltonian_nonexit(problem, plane, g, Covector(p.p0, lo))
        h_hi = hamiltonian_nonexit(problem, plane, g, Covector(p.p0, hi))
        viol_mono = max(viol_mono, h_hi - h_lo)
        if delta > 0:
            viol_pseudo = max(viol_pseudo,
                              -delta * p.pi - c_m * (1.0 + abs(p.p0))
                              - hamiltonian_nonexit(problem, plane, g, p))
            hg = hamiltonian_nonexit(problem, plane, g, p)
            hgb = hamiltonian_nonexit(problem, plane, gb, p)
            gap = abs(g.x0 - gb.x0)
            viol_ix = max(viol_ix, abs(hg - hgb) - (big_m * gap * pnorm + omega(gap)))
    return HamiltonianRegularityReport(viol_lx, viol_lp, viol_co, viol_mono,
                                       viol_pseudo, viol_ix, delta, tube)
