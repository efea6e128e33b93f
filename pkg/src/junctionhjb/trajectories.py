"""Admissible trajectories: integration, discounted cost, and brute-force value oracles.

Trajectories follow piecewise-constant control laws by explicit Euler steps
with exact interface sub-stepping: a step that would cross the interface is
split at the crossing time computed from the start-of-step velocity, the
crossing is recorded, and the remainder of the step continues according to the
active atom's admissibility on the interface. An atom pointing out of its
half-plane while the state sits on the interface makes the law infeasible —
the oracle searches only over admissible laws.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from .errors import (
    BudgetExceededError,
    DomainError,
    InfeasibleTrajectoryError,
    NormalControllabilityError,
)
from .geometry import INTERFACE_PLANE, JunctionPoint, interface_point
from .problem import (
    ControlAtom,
    Domain,
    JunctionProblem,
    cost_floor,
    law_atom_plane,
    resolve_law_atom,
)

_TIME_EPS = 1e-12


@dataclass(frozen=True)
class ControlLaw:
    """Piecewise-constant control schedule: ordered (duration, atom id) pieces."""

    schedule: tuple[tuple[float, str], ...]

    def __post_init__(self) -> None:
        if not self.schedule:
            raise ValueError("a control law needs at least one piece")
        for dur, _ in self.schedule:
            if dur <= 0:
                raise ValueError(f"piece durations must be positive, got {dur}")

    @property
    def total_horizon(self) -> float:
        return sum(d for d, _ in self.schedule)


@dataclass(frozen=True)
class Crossing:
    t: float
    kind: str  # "hit_interface" or "enter_plane_<k>"


@dataclass(frozen=True)
class Trajectory:
    """Sampled state path. ``samples[k]`` is (t, point, atom id active from t on);
    the final sample carries an empty atom id."""

    samples: tuple[tuple[float, JunctionPoint, str], ...]
    crossings: tuple[Crossing, ...]
    feasible: bool
    infeasible_reason: str = ""

    @property
    def end_time(self) -> float:
        return self.samples[-1][0]

    @property
    def end_point(self) -> JunctionPoint:
        return self.samples[-1][1]


@dataclass(frozen=True)
class CostResult:
    """Discounted cost over the integrated horizon plus the tail truncation bound."""

    value: float
    truncation_bound: float


class _Walker:
    """Mutable integration state shared by the trajectory builder and the oracle."""

    __slots__ = ("plane", "x0", "xi", "t", "feasible", "reason")

    def __init__(self, start: JunctionPoint):
        self.plane = start.plane
        self.x0 = start.x0
        self.xi = start.xi
        self.t = 0.0
        self.feasible = True
        self.reason = ""

    def point(self) -> JunctionPoint:
        if self.xi == 0.0:
            return interface_point(self.x0)
        return JunctionPoint(self.plane, self.x0, self.xi)


def _advance(problem: JunctionProblem, w: _Walker, atom: ControlAtom, atom_plane: int,
             duration: float, dt: float, lam: float,
             samples: list | None, crossings: list | None) -> float:
    """Advance the walker under one atom for ``duration``; returns the discounted cost
    accumulated over the piece. Marks the walker infeasible on an inadmissible event."""
    remaining = duration
    accrued = 0.0
    while remaining > _TIME_EPS:
        here = w.point()
        if w.xi > 0.0 and atom_plane != w.plane:
            w.feasible = False
            w.reason = (f"atom {atom.id!r} of plane {atom_plane} applied inside plane "
                        f"{w.plane} at t={w.t:.6g}")
            return accrued
        try:
            f0, fi = atom.dynamics(here)
            ell = atom.cost(here)
        except ValueError as exc:  # a mixture can cease to exist where the pair stops straddling
            w.feasible = False
            w.reason = f"{exc} at t={w.t:.6g}"
            return accrued
        h = min(dt, remaining)
        if w.xi == 0.0:
            if fi < 0.0:
                w.feasible = False
                w.reason = (f"atom {atom.id!r} points out of its half-plane on the "
                            f"interface at t={w.t:.6g}")
                return accrued
            if fi > 0.0:
                if crossings is not None:
                    crossings.append(Crossing(w.t, f"enter_plane_{atom_plane}"))
                w.plane = atom_plane
                accrued += ell * (math.exp(-lam * w.t) - math.exp(-lam * (w.t + h))) / lam
                w.x0 += h * f0
                w.xi = h * fi
                w.t += h
            else:
                accrued += ell * (math.exp(-lam * w.t) - math.exp(-lam * (w.t + h))) / lam
                w.x0 += h * f0
                w.t += h
            remaining -= h
        else:
            if fi < 0.0 and w.xi + h * fi < 0.0:
                # exact sub-step to the interface
                h_star = w.xi / (-fi)
                accrued += ell * (math.exp(-lam * w.t) - math.exp(-lam * (w.t + h_star))) / lam
                w.x0 += h_star * f0
                w.xi = 0.0
                w.t += h_star
                remaining -= h_star
                if crossings is not None:
                    crossings.append(Crossing(w.t, "hit_interface"))
            else:
                accrued += ell * (math.exp(-lam * w.t) - math.exp(-lam * (w.t + h))) / lam
                w.x0 += h * f0
                w.xi = max(0.0, w.xi + h * fi)
                w.t += h
                remaining -= h
                if w.xi == 0.0 and crossings is not None:
                    crossings.append(Crossing(w.t, "hit_interface"))
        if samples is not None:
            samples.append((w.t, w.point(), atom.id))
    return accrued


def integrate(problem: JunctionProblem, start: JunctionPoint, law: ControlLaw,
              dt: float) -> Trajectory:
    """Integrate a control law from ``start`` by explicit Euler with interface sub-stepping."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    w = _Walker(start)
    samples: list[tuple[float, JunctionPoint, str]] = []
    crossings: list[Crossing] = []
    samples.append((0.0, w.point(), law.schedule[0][1]))
    for k, (duration, atom_id) in enumerate(law.schedule):
        atom = resolve_law_atom(problem, atom_id)
        atom_plane = law_atom_plane(problem, atom_id)
        _advance(problem, w, atom, atom_plane, duration, dt, problem.lam, samples, crossings)
        if not w.feasible:
            break
        if k + 1 < len(law.schedule):
            # samples carry the atom active from their time on
            t, p, _ = samples[-1]
            samples[-1] = (t, p, law.schedule[k + 1][1])
    final = samples[-1]
    samples[-1] = (final[0], final[1], "")
    return Trajectory(tuple(samples), tuple(crossings), w.feasible, w.reason)


def trajectory_cost(problem: JunctionProblem, traj: Trajectory) -> CostResult:
    """Discounted running cost over the trajectory horizon, cost frozen at each step start."""
    if not traj.feasible:
        raise InfeasibleTrajectoryError(traj.infeasible_reason or "trajectory is infeasible")
    lam = problem.lam
    total = 0.0
    for (t0, p0, atom_id), (t1, _, _) in zip(traj.samples, traj.samples[1:]):
        atom = resolve_law_atom(problem, atom_id)
        total += atom.cost(p0) * (math.exp(-lam * t0) - math.exp(-lam * t1)) / lam
    bound = problem.m_ell * math.exp(-lam * traj.end_time) / lam
    return CostResult(total, bound)


def _atom_plane_map(problem: JunctionProblem) -> list[tuple[ControlAtom, int]]:
    pairs = []
    for i, atoms in enumerate(problem.plane_controls):
        pairs.extend((a, i + 1) for a in atoms)
    pairs.extend((a, INTERFACE_PLANE) for a in problem.interface_controls)
    return pairs


def brute_force_value(problem: JunctionProblem, start: JunctionPoint, n_segments: int,
                      seg_duration: float, dt: float,
                      budget: int = 1_000_000) -> tuple[float, float]:
    """Exact minimum of the truncated discounted cost over all equal-segment laws.

    Enumerates every law with ``n_segments`` pieces of ``seg_duration`` drawn
    from the declared atoms (infeasible laws excluded), sharing common law
    prefixes and pruning branches whose accrued cost plus a rigorous tail lower
    bound cannot beat the incumbent. Returns (value, error bracket) where the
    bracket stacks the tail truncation bound and a reported (not proven)
    integration term proportional to dt.
    """
    if n_segments < 1 or seg_duration <= 0 or dt <= 0:
        raise ValueError("n_segments >= 1 and positive seg_duration, dt are required")
    atoms = _atom_plane_map(problem)
    n_laws = len(atoms) ** n_segments
    if n_laws > budget:
        raise BudgetExceededError(
            f"{len(atoms)}^{n_segments} = {n_laws} laws exceed the budget of {budget}")
    lam = problem.lam
    horizon = n_segments * seg_duration
    floor = cost_floor(problem, _enclosing_domain(problem, start, horizon))
    best = math.inf

    def tail_bound(t: float) -> float:
        return min(0.0, floor) * (math.exp(-lam * t) - math.exp(-lam * horizon)) / lam

    def search(w: _Walker, accrued: float, depth: int) -> None:
        nonlocal best
        if depth == n_segments:
            best = min(best, accrued)
            return
        for atom, plane in atoms:
            w2 = _Walker(w.point())
            w2.t = w.t
            gained = _advance(problem, w2, atom, plane, seg_duration, dt, lam, None, None)
            if not w2.feasible:
                continue
            total = accrued + gained
            if total + tail_bound(w2.t) >= best:
                continue
            search(w2, total, depth + 1)

    search(_Walker(start), 0.0, 0)
    if math.isinf(best):
        raise NormalControllabilityError(
            "every enumerated law is infeasible; the problem violates the "
            "normal-controllability assumption at the start point")
    bracket = problem.m_ell * math.exp(-lam * horizon) / lam + problem.m_ell * dt
    return best, bracket


def _enclosing_domain(problem: JunctionProblem, start: JunctionPoint, horizon: float) -> Domain:
    reach = problem.m_f * horizon + 1.0
    return Domain(start.x0 - reach, start.x0 + reach, start.xi + reach)


def dpp_residual(problem: JunctionProblem, field, start: JunctionPoint, t: float,
                 budget: int = 4096, dt: float | None = None) -> float:
    """One-step optimality residual of a value field at ``start`` over horizon ``t``.

    Minimizes running cost plus the discounted interpolated field value at the
    endpoint over budgeted equal-segment laws; laws whose endpoint leaves the
    field domain are skipped. A small residual is evidence of consistency with
    the optimality recursion, not a proof.
    """
    from .solver import interpolate

    atoms = _atom_plane_map(problem)
    n_segments = max(1, int(math.log(budget) / math.log(len(atoms))))
    seg = t / n_segments
    step = dt if dt is not None else min(seg, 0.01)
    lam = problem.lam
    best = math.inf

    def search(w: _Walker, accrued: float, depth: int) -> None:
        nonlocal best
        if depth == n_segments:
            try:
                endpoint = interpolate(field, w.point())
            except DomainError:
                return
            best = min(best, accrued + math.exp(-lam * w.t) * endpoint)
            return
        for atom, plane in atoms:
            w2 = _Walker(w.point())
            w2.t = w.t
            gained = _advance(problem, w2, atom, plane, seg, step, lam, None, None)
            if not w2.feasible:
                continue
            search(w2, accrued + gained, depth + 1)

    search(_Walker(start), 0.0, 0)
    if math.isinf(best):
        raise DomainError("no budgeted law keeps its endpoint inside the field domain")
    return abs(interpolate(field, start) - best)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Write trajectory samples as CSV columns (t, plane, x0, xi, atom_id, event)."""
    events: dict[float, list[str]] = {}
    for c in traj.crossings:
        events.setdefault(c.t, []).append(c.kind)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "plane", "x0", "xi", "atom_id", "event"])
        for t, p, atom_id in traj.samples:
            writer.writerow([repr(t), p.plane, repr(p.x0), repr(p.xi), atom_id,
                             ";".join(events.get(t, []))])
        if not traj.feasible:
            last = traj.samples[-1]
            writer.writerow([repr(last[0]), last[1].plane, repr(last[1].x0),
                             repr(last[1].xi), "", "infeasible"])
