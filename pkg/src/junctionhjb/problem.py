"""Problem definition: control atoms, dynamics/cost evaluators, and assumption checkers.

Control sets are finite lists of atoms. Each atom carries evaluators for the
two velocity components (along the interface and along the plane normal) and
for the running cost. Continuous control families are represented by sampled
parametric families (see :func:`disc_family`). Convexity of the velocity-cost
sets, where the theory needs it, is recovered by explicit pairwise mixing of
atoms that straddle zero normal velocity (:func:`zero_normal_mixing`), gated
by the problem's ``convexify`` flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import EmptyControlSetError, InvalidPointError, UnknownAtomError
from .geometry import JunctionPoint, JunctionShape

Coef = Union[float, "AffineCoef", Callable[[float, float], float]]


@dataclass(frozen=True)
class AffineCoef:
    """Scalar field affine in the intrinsic coordinates: const + cx0*x0 + cxi*xi."""

    const: float
    cx0: float = 0.0
    cxi: float = 0.0

    def __call__(self, x0, xi):
        return self.const + self.cx0 * x0 + self.cxi * xi


def eval_coef(coef: Coef, x0: float, xi: float) -> float:
    if callable(coef):
        return float(coef(x0, xi))
    return float(coef)


def eval_coef_grid(coef: Coef, x0: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Evaluate a coefficient on coordinate arrays (broadcasting)."""
    if isinstance(coef, AffineCoef):
        return np.broadcast_to(coef.const + coef.cx0 * x0 + coef.cxi * xi,
                               np.broadcast_shapes(np.shape(x0), np.shape(xi))).astype(float)
    if callable(coef):
        x0b, xib = np.broadcast_arrays(np.asarray(x0, float), np.asarray(xi, float))
        out = np.empty(x0b.shape, dtype=float)
        flat_out, flat0, flati = out.ravel(), x0b.ravel(), xib.ravel()
        for k in range(flat_out.size):
            flat_out[k] = float(coef(flat0[k], flati[k]))
        return out
    return np.full(np.broadcast_shapes(np.shape(x0), np.shape(xi)), float(coef))


@dataclass(frozen=True)
class ControlAtom:
    """A labeled control with velocity evaluators (f0, fi) and a running-cost evaluator.

    Interface atoms (``interface=True``) act only on the interface and have a
    structurally zero normal component.
    """

    id: str
    f0: Coef
    fi: Coef
    ell: Coef
    interface: bool = False

    def dynamics(self, p: JunctionPoint) -> tuple[float, float]:
        if self.interface:
            return eval_coef(self.f0, p.x0, p.xi), 0.0
        return eval_coef(self.f0, p.x0, p.xi), eval_coef(self.fi, p.x0, p.xi)

    def cost(self, p: JunctionPoint) -> float:
        return eval_coef(self.ell, p.x0, p.xi)


def constant_atom(atom_id: str, f0: float, fi: float, ell: float) -> ControlAtom:
    return ControlAtom(atom_id, float(f0), float(fi), float(ell))


def interface_atom(atom_id: str, f0: Coef, ell: Coef) -> ControlAtom:
    return ControlAtom(atom_id, f0, 0.0, ell, interface=True)


def disc_family(atom_id: str, radius: float, ell: Coef, n_samples: int,
                center: tuple[float, float] = (0.0, 0.0)) -> list[ControlAtom]:
    """Angle-sampled family of constant velocities on a circle of given radius.

    Samples are at angles 2*pi*k/n_samples; with n_samples divisible by 4 the
    four axis directions are hit exactly.
    """
    if n_samples < 3:
        raise ValueError("disc family needs at least 3 angle samples")
    atoms = []
    for k in range(n_samples):
        theta = 2.0 * math.pi * k / n_samples
        f0 = center[0] + radius * math.cos(theta)
        fi = center[1] + radius * math.sin(theta)
        # snap velocities that are exactly axis-aligned in exact arithmetic
        if k * 4 % n_samples == 0:
            f0, fi = round(f0, 15), round(fi, 15)
            if abs(f0) < 1e-15:
                f0 = 0.0
            if abs(fi) < 1e-15:
                fi = 0.0
        atoms.append(ControlAtom(f"{atom_id}#{k}", f0, fi, ell))
    return atoms


@dataclass(frozen=True)
class VelocityCost:
    """A (velocity, running cost) pair: components (f0, fi) and cost ell."""

    f0: float
    fi: float
    ell: float
    atom_id: str = ""

    def pair_vector(self) -> np.ndarray:
        return np.array([self.f0, self.fi, self.ell])


@dataclass(frozen=True)
class Domain:
    """Rectangular computational window: x0 in [x0_min, x0_max], xi in [0, xi_max]."""

    x0_min: float
    x0_max: float
    xi_max: float

    def __post_init__(self) -> None:
        if not (self.x0_max > self.x0_min and self.xi_max > 0):
            raise ValueError("domain must have positive extent")


@dataclass(frozen=True)
class JunctionProblem:
    """Immutable problem data: per-plane control sets, optional interface controls, discount.

    ``m_f``, ``m_ell``, ``l_f`` (and optionally ``l_ell``) are declared bounds on
    the velocity magnitude, cost magnitude, velocity Lipschitz constant and cost
    Lipschitz constant; they are cross-checked empirically by the assumption
    checkers, never silently trusted.
    """

    shape: JunctionShape
    plane_controls: tuple[tuple[ControlAtom, ...], ...]
    lam: float
    m_f: float
    m_ell: float
    l_f: float
    l_ell: float | None = None
    interface_controls: tuple[ControlAtom, ...] = ()
    convexify: bool = True
    _by_id: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError(f"discount rate must be positive, got {self.lam}")
        if len(self.plane_controls) != self.shape.n_planes:
            raise ValueError("one control list per plane is required")
        for i, atoms in enumerate(self.plane_controls):
            if not atoms:
                raise EmptyControlSetError(f"plane {i + 1} has an empty control set")
        seen: dict[str, ControlAtom] = {}
        for atoms in (*self.plane_controls, self.interface_controls):
            for a in atoms:
                if a.id in seen:
                    raise ValueError(f"duplicate atom id {a.id!r}; control sets must be disjoint")
                seen[a.id] = a
        self._by_id.update(seen)

    def atoms(self, plane: int) -> tuple[ControlAtom, ...]:
        if not 1 <= plane <= self.shape.n_planes:
            raise ValueError(f"plane index must be in 1..{self.shape.n_planes}, got {plane}")
        return self.plane_controls[plane - 1]

    def plane_of_atom(self, atom_id: str) -> int:
        """Plane owning the atom (0 for interface atoms)."""
        for i, atoms in enumerate(self.plane_controls):
            if any(a.id == atom_id for a in atoms):
                return i + 1
        if any(a.id == atom_id for a in self.interface_controls):
            return 0
        raise UnknownAtomError(atom_id)

    def atom_by_id(self, atom_id: str) -> ControlAtom:
        try:
            return self._by_id[atom_id]
        except KeyError:
            raise UnknownAtomError(atom_id) from None

    def all_atom_ids(self) -> list[str]:
        ids = [a.id for atoms in self.plane_controls for a in atoms]
        ids.extend(a.id for a in self.interface_controls)
        return ids

    def value_bound(self) -> float:
        return self.m_ell / self.lam


def velocity_cost_set(problem: JunctionProblem, plane: int, x: JunctionPoint) -> list[VelocityCost]:
    """Velocity-cost pairs of the plane's atoms evaluated at x, in declaration order."""
    out = []
    for a in problem.atoms(plane):
        f0, fi = a.dynamics(x)
        out.append(VelocityCost(f0, fi, a.cost(x), a.id))
    return out


def interface_velocity_cost_set(problem: JunctionProblem, x: JunctionPoint) -> list[VelocityCost]:
    """Velocity-cost pairs of the interface atoms at an interface point x."""
    if x.xi != 0.0:
        raise InvalidPointError("interface controls are only defined on the interface")
    out = []
    for a in problem.interface_controls:
        f0, fi = a.dynamics(x)
        out.append(VelocityCost(f0, 0.0, a.cost(x), a.id))
    return out


def pair_mixtures(points: Sequence[VelocityCost]) -> list[VelocityCost]:
    """Zero-normal convex combinations of every pair straddling fi = 0.

    For fi_a > 0 > fi_b the weight theta = -fi_b / (fi_a - fi_b) zeroes the
    normal component; the output fi is forced to exactly 0.
    """
    ups = [p for p in points if p.fi > 0]
    downs = [p for p in points if p.fi < 0]
    out = []
    for a in ups:
        for b in downs:
            theta = -b.fi / (a.fi - b.fi)
            out.append(VelocityCost(
                theta * a.f0 + (1 - theta) * b.f0,
                0.0,
                theta * a.ell + (1 - theta) * b.ell,
                f"mix({a.atom_id},{b.atom_id})",
            ))
    return out


def zero_normal_mixing(points: Sequence[VelocityCost]) -> list[VelocityCost]:
    """Zero-normal part of the convexified point set: native fi == 0 points plus pair mixtures."""
    if not points:
        raise EmptyControlSetError("cannot mix an empty point list")
    native = [p for p in points if p.fi == 0.0]
    return native + pair_mixtures(points)


def nonexit_set(problem: JunctionProblem, plane: int, x: JunctionPoint) -> list[VelocityCost]:
    """Velocity-cost pairs not exiting the half-plane (fi >= 0) at an interface point.

    With ``problem.convexify`` the set is augmented with the pairwise
    zero-normal mixtures, realizing the convex closure on the finite set. An
    empty result signals a normal-controllability failure at x.
    """
    if x.xi != 0.0:
        raise InvalidPointError("the nonexit restriction is only defined on the interface")
    pts = velocity_cost_set(problem, plane, x)
    kept = [p for p in pts if p.fi >= 0]
    if problem.convexify:
        kept += pair_mixtures(pts)
    return kept


def mixed_atom(problem: JunctionProblem, id_a: str, id_b: str) -> ControlAtom:
    """Pointwise zero-normal mixture of two same-plane atoms, usable in control laws.

    Requires ``problem.convexify`` (the mixture stands in for a control that
    convexity of the velocity-cost set guarantees to exist). The mixing weight
    is recomputed at every evaluation point, so the normal component is exactly
    zero everywhere the pair straddles fi = 0.
    """
    if not problem.convexify:
        raise ValueError("mixed atoms require the problem's convexify flag")
    a, b = problem.atom_by_id(id_a), problem.atom_by_id(id_b)
    if problem.plane_of_atom(id_a) != problem.plane_of_atom(id_b):
        raise ValueError("mixed atoms must come from the same plane")

    def mix(coef_a: Coef, coef_b: Coef) -> Callable[[float, float], float]:
        def value(x0: float, xi: float) -> float:
            fa = eval_coef(a.fi, x0, xi)
            fb = eval_coef(b.fi, x0, xi)
            if not (fa > 0 > fb or fb > 0 > fa):
                raise ValueError(f"atoms {id_a!r},{id_b!r} do not straddle fi=0 at ({x0},{xi})")
            theta = -fb / (fa - fb)
            return theta * eval_coef(coef_a, x0, xi) + (1 - theta) * eval_coef(coef_b, x0, xi)
        return value

    return ControlAtom(f"mix({id_a},{id_b})", mix(a.f0, b.f0), 0.0, mix(a.ell, b.ell))


def _split_mix_id(atom_id: str) -> tuple[str, str] | None:
    if atom_id.startswith("mix(") and atom_id.endswith(")"):
        id_a, sep, id_b = atom_id[4:-1].partition(",")
        if sep:
            return id_a.strip(), id_b.strip()
    return None


def resolve_law_atom(problem: JunctionProblem, atom_id: str) -> ControlAtom:
    """Resolve a law atom id, accepting the mix(a,b) syntax for tangential mixtures."""
    pair = _split_mix_id(atom_id)
    if pair is not None:
        return mixed_atom(problem, *pair)
    return problem.atom_by_id(atom_id)


def law_atom_plane(problem: JunctionProblem, atom_id: str) -> int:
    """Plane owning a law atom id (0 for interface atoms; mixtures inherit their pair's plane)."""
    pair = _split_mix_id(atom_id)
    if pair is not None:
        return problem.plane_of_atom(pair[0])
    return problem.plane_of_atom(atom_id)


# ---------------------------------------------------------------------------
# assumption checkers


@dataclass(frozen=True)
class RegularityReport:
    """Empirical bound and regularity estimates with violations of the declared constants."""

    m_f_est: float
    m_ell_est: float
    l_f_est: float
    omega_ell_est: float
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _sample_points(domain: Domain, plane: int, n: int, rng: np.random.Generator) -> list[JunctionPoint]:
    x0 = rng.uniform(domain.x0_min, domain.x0_max, size=n)
    xi = rng.uniform(0.0, domain.xi_max, size=n)
    xi[: max(1, n // 4)] = 0.0  # always probe the interface
    return [JunctionPoint(plane, float(a), float(b)) for a, b in zip(x0, xi)]


def estimate_regularity(problem: JunctionProblem, domain: Domain, n_samples: int = 200,
                        seed: int = 0) -> RegularityReport:
    """Sampled sup bounds and difference-quotient estimates for velocities and costs.

    Flags any estimate exceeding a declared constant. Estimates are lower
    bounds of the true suprema and grow toward them with the sampling budget.
    """
    if n_samples <= 0:
        raise ValueError("sampling budget must be positive")
    rng = np.random.default_rng(seed)
    m_f = m_ell = l_f = omega = 0.0
    atom_groups = list(problem.plane_controls) + ([problem.interface_controls]
                                                  if problem.interface_controls else [])
    planes = list(range(1, problem.shape.n_planes + 1)) + ([0] if problem.interface_controls else [])
    for plane, atoms in zip(planes, atom_groups):
        pts = _sample_points(domain, max(plane, 1), n_samples, rng)
        if plane == 0:
            pts = [JunctionPoint(1, p.x0, 0.0) for p in pts]
        for a in atoms:
            vals = [(a.dynamics(p), a.cost(p)) for p in pts]
            for (f0, fi), c in vals:
                m_f = max(m_f, math.hypot(f0, fi))
                m_ell = max(m_ell, abs(c))
            for (p, ((f0, fi), c)), (q, ((g0, gi), d)) in zip(
                    zip(pts, vals), zip(pts[1:], vals[1:])):
                dist = math.hypot(p.x0 - q.x0, p.xi - q.xi)
                if dist < 1e-12:
                    continue
                l_f = max(l_f, math.hypot(f0 - g0, fi - gi) / dist)
                omega = max(omega, abs(c - d) / dist)
    tol = 1e-9
    violations = []
    if m_f > problem.m_f + tol:
        violations.append(f"velocity bound exceeded: estimated {m_f:.6g} > declared {problem.m_f:.6g}")
    if m_ell > problem.m_ell + tol:
        violations.append(f"cost bound exceeded: estimated {m_ell:.6g} > declared {problem.m_ell:.6g}")
    if l_f > problem.l_f + tol:
        violations.append(f"velocity Lipschitz constant exceeded: estimated {l_f:.6g} > declared {problem.l_f:.6g}")
    if problem.l_ell is not None and omega > problem.l_ell + tol:
        violations.append(f"cost Lipschitz constant exceeded: estimated {omega:.6g} > declared {problem.l_ell:.6g}")
    return RegularityReport(m_f, m_ell, l_f, omega, tuple(violations))


def convexity_gap(problem: JunctionProblem, plane: int, x: JunctionPoint) -> float:
    """How far the finite velocity-cost set is from being midpoint-convex.

    For every pair of atoms, measures the distance from their midpoint in
    (f0, fi, ell) space to the nearest atom; returns the worst gap. Zero means
    midpoint convexity holds exactly on the finite set.
    """
    pts = np.array([p.pair_vector() for p in velocity_cost_set(problem, plane, x)])
    if len(pts) == 1:
        return 0.0
    gap = 0.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            mid = 0.5 * (pts[i] + pts[j])
            gap = max(gap, float(np.min(np.linalg.norm(pts - mid, axis=1))))
    return gap


def normal_span_radius(problem: JunctionProblem, x: JunctionPoint) -> list[float]:
    """Per plane, the radius of the symmetric normal-velocity interval covered at x.

    Returns min(max_a fi, -min_a fi) clamped at zero: the largest d with both
    +d and -d reachable as normal components (endpoint coverage; with
    convexification the whole interval follows).
    """
    out = []
    for plane in problem.shape.planes:
        fis = [p.fi for p in velocity_cost_set(problem, plane, x)]
        out.append(max(0.0, min(max(fis), -min(fis))))
    return out


def velocity_ball_radius(problem: JunctionProblem, x: JunctionPoint) -> list[float]:
    """Per plane, the largest r with the full velocity ball B(0, r) inside the sampled hull.

    Computed as the minimum distance from the origin to the facets of the
    convex hull of the (f0, fi) samples; zero when the origin is outside the
    hull or the hull is degenerate.
    """
    from scipy.spatial import ConvexHull, QhullError

    out = []
    for plane in problem.shape.planes:
        pts = np.array([(p.f0, p.fi) for p in velocity_cost_set(problem, plane, x)])
        pts = np.unique(pts, axis=0)
        if len(pts) < 3:
            out.append(0.0)
            continue
        try:
            hull = ConvexHull(pts)
        except QhullError:
            out.append(0.0)
            continue
        # facet equations are normalized: n.x + b <= 0 inside, |n| = 1
        offsets = hull.equations[:, -1]
        out.append(float(max(0.0, -np.max(offsets))) if np.all(offsets < 0) else 0.0)
    return out


def controllability_radius(problem: JunctionProblem, domain: Domain, mode: str = "normal",
                           n_x0: int = 9, n_xi: int = 41) -> float:
    """Largest sampled tube radius around the interface keeping half the interface margin.

    ``mode="ball"`` uses the inscribed velocity-ball radius, ``mode="normal"``
    the normal-span radius. The margin delta is the worst per-plane radius over
    sampled interface points; the returned radius is the largest xi level up to
    which every sampled point still achieves delta / 2. Degenerate margins
    (delta ~ 0) give 0.
    """
    if mode == "ball":
        radius_fn = velocity_ball_radius
    elif mode == "normal":
        radius_fn = normal_span_radius
    else:
        raise ValueError(f"mode must be 'ball' or 'normal', got {mode!r}")
    x0s = np.linspace(domain.x0_min, domain.x0_max, n_x0)
    delta0 = min(min(radius_fn(problem, JunctionPoint(1, float(x0), 0.0))) for x0 in x0s)
    if delta0 <= 1e-12:
        return 0.0
    levels = np.linspace(0.0, domain.xi_max, n_xi)
    largest = 0.0
    for r in levels:
        ok = all(min(radius_fn(problem, JunctionPoint(1, float(x0), float(r)))) >= delta0 / 2
                 for x0 in x0s)
        if not ok:
            break
        largest = float(r)
    return largest


def cost_floor(problem: JunctionProblem, domain: Domain) -> float:
    """A lower bound on every running cost over the domain (used for exact pruning)."""
    corners = [(domain.x0_min, 0.0), (domain.x0_max, 0.0),
               (domain.x0_min, domain.xi_max), (domain.x0_max, domain.xi_max)]
    floor = math.inf
    for atoms in (*problem.plane_controls, problem.interface_controls):
        for a in atoms:
            if isinstance(a.ell, AffineCoef):
                floor = min(floor, min(a.ell(c0, ci) for c0, ci in corners))
            elif callable(a.ell):
                return -problem.m_ell
            else:
                floor = min(floor, float(a.ell))
    return float(floor)
