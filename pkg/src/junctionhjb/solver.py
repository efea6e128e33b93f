"""Semi-Lagrangian value iteration on a discretized junction.

The scheme is the one-step optimality recursion with piecewise-constant
controls: each sweep replaces the value at every node by the minimum over
admissible atoms of the exact per-step discounted cost plus the discounted
interpolated value at the Euler foot. Feet that would cross the interface are
sub-stepped exactly (the foot lands on the interface at the crossing time),
mirroring the trajectory integrator so the solver and the brute-force oracle
discretize the same dynamics. Sweeps are Jacobi (read the previous iterate
only), which makes the iteration a sup-norm contraction with factor
exp(-lam*dt) per nominal step and keeps results bit-identical under any
parallel execution.

Off the interface a node sees its own plane's atoms; interface nodes see every
plane's atoms with nonnegative normal velocity, the zero-normal pair mixtures
(when the problem is convexified) and the interface atoms. Atoms whose foot
leaves the truncated domain are excluded node-wise; nodes with every atom
excluded take the safe upper bound m_ell/lam and are flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
import numpy as np

from .errors import ConvergenceError, DomainError, InvalidPointError, NormalControllabilityError
from .geometry import JunctionPoint
from .problem import (
    Domain,
    JunctionProblem,
    eval_coef_grid,
    velocity_ball_radius,
)
from . import _kernel


@dataclass(frozen=True)
class JunctionGrid:
    """Per-plane rectangular grids sharing one interface row of nodes.

    All planes use the same x0 nodes (n0 of them on [x0_min, x0_max]) and the
    same normal resolution (ni nodes on [0, xi_max]); the interface row xi = 0
    is stored once and shared by every plane.
    """

    n_planes: int
    x0_min: float
    x0_max: float
    n0: int
    xi_max: float
    ni: int

    def __post_init__(self) -> None:
        if self.n_planes < 2:
            raise ValueError("a junction grid needs at least 2 planes")
        if self.n0 < 2 or self.ni < 2:
            raise ValueError("grid needs at least 2 nodes per direction")
        if not (self.x0_max > self.x0_min and self.xi_max > 0):
            raise ValueError("grid domain must have positive extent")

    @property
    def dx0(self) -> float:
        return (self.x0_max - self.x0_min) / (self.n0 - 1)

    @property
    def dxi(self) -> float:
        return self.xi_max / (self.ni - 1)

    @property
    def n_nodes(self) -> int:
        return self.n0 + self.n_planes * (self.ni - 1) * self.n0

    @property
    def x0_nodes(self) -> np.ndarray:
        return np.linspace(self.x0_min, self.x0_max, self.n0)

    @property
    def xi_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.xi_max, self.ni)

    def domain(self) -> Domain:
        return Domain(self.x0_min, self.x0_max, self.xi_max)

    def plane_base(self, plane: int) -> int:
        return self.n0 + (plane - 1) * (self.ni - 1) * self.n0

    def flat_index(self, plane: int, row: int, col: int) -> int:
        """Flat node index; row 0 is the shared interface row for every plane."""
        if row == 0:
            return col
        return self.plane_base(plane) + (row - 1) * self.n0 + col


@dataclass(frozen=True)
class ValueField:
    """Converged (or in-progress) nodal values on a junction grid."""

    grid: JunctionGrid
    values: np.ndarray  # flat, grid.n_nodes
    flagged: np.ndarray  # flat bool: all atoms boundary-excluded at this node
    iterations: int
    dt: float
    final_diff: float
    converged: bool
    sup_diff_history: tuple[float, ...] = ()

    def plane_values(self, plane: int) -> np.ndarray:
        """Nodal values of one plane as an (ni, n0) array; row 0 is the interface row."""
        g = self.grid
        base = g.plane_base(plane)
        interior = self.values[base: base + (g.ni - 1) * g.n0].reshape(g.ni - 1, g.n0)
        return np.vstack([self.values[: g.n0], interior])

    def plane_flags(self, plane: int) -> np.ndarray:
        g = self.grid
        base = g.plane_base(plane)
        interior = self.flagged[base: base + (g.ni - 1) * g.n0].reshape(g.ni - 1, g.n0)
        return np.vstack([self.flagged[: g.n0], interior])

    def interface_values(self) -> np.ndarray:
        return self.values[: self.grid.n0].copy()


class SchemeOperator:
    """Precomputed one-sweep operator of the semi-Lagrangian scheme."""

    def __init__(self, problem: JunctionProblem, grid: JunctionGrid, dt: float):
        if dt <= 0:
            raise ValueError("dt must be positive")
        if problem.shape.n_planes != grid.n_planes:
            raise ValueError("problem and grid disagree on the number of planes")
        self.problem = problem
        self.grid = grid
        self.dt = dt
        self.safe_value = problem.value_bound()
        self._build()

    # -- construction -------------------------------------------------------

    def _interp_entries(self, plane: int, foot_x0: np.ndarray, foot_xi: np.ndarray):
        """Bilinear stencil (4 indices, 4 weights) for feet inside plane ``plane``."""
        g = self.grid
        u = (foot_x0 - g.x0_min) / g.dx0
        col = np.clip(np.floor(u).astype(np.int64), 0, g.n0 - 2)
        wx = np.clip(u - col, 0.0, 1.0)
        t = foot_xi / g.dxi
        row = np.clip(np.floor(t).astype(np.int64), 0, g.ni - 2)
        wy = np.clip(t - row, 0.0, 1.0)
        base = g.plane_base(plane)

        def flat(r, c):
            return np.where(r == 0, c, base + (r - 1) * g.n0 + c)

        idx = np.stack([flat(row, col), flat(row, col + 1),
                        flat(row + 1, col), flat(row + 1, col + 1)], axis=-1)
        w = np.stack([(1 - wx) * (1 - wy), wx * (1 - wy),
                      (1 - wx) * wy, wx * wy], axis=-1)
        return idx.astype(np.int32), w

    def _build(self) -> None:
        g, problem, dt = self.grid, self.problem, self.dt
        lam = problem.lam
        nodes_l, idx_l, w_l, cost_l, disc_l = [], [], [], [], []

        def emit(node_flat, idx, w, cost, disc, keep):
            nodes_l.append(node_flat[keep].astype(np.int64))
            idx_l.append(idx[keep])
            w_l.append(w[keep])
            cost_l.append(cost[keep])
            disc_l.append(np.broadcast_to(disc, cost.shape)[keep])

        x0s = g.x0_nodes
        in_x0 = lambda a: (a >= g.x0_min) & (a <= g.x0_max)

        # interior nodes: own-plane atoms, exact sub-step onto the interface
        rows = g.xi_nodes[1:]
        X0, XI = np.meshgrid(x0s, rows, indexing="xy")
        for plane in problem.shape.planes:
            base = g.plane_base(plane)
            node_flat = base + np.arange((g.ni - 1) * g.n0).reshape(g.ni - 1, g.n0)
            for atom in problem.atoms(plane):
                f0 = eval_coef_grid(atom.f0, X0, XI)
                fi = eval_coef_grid(atom.fi, X0, XI)
                ell = eval_coef_grid(atom.ell, X0, XI)
                crossing = (fi < 0) & (XI + dt * fi < 0)
                dtstar = np.where(crossing, XI / np.where(crossing, -fi, 1.0), dt)
                foot_x0 = X0 + dtstar * f0
                foot_xi = np.where(crossing, 0.0, XI + dt * fi)
                keep = in_x0(foot_x0) & (foot_xi <= g.xi_max)
                idx, w = self._interp_entries(plane, foot_x0, foot_xi)
                cost = ell * (1.0 - np.exp(-lam * dtstar)) / lam
                disc = np.exp(-lam * dtstar)
                emit(node_flat, idx, w, cost, disc, keep)

        # interface nodes: every plane's nonexiting atoms, mixtures, interface atoms
        gamma_nodes = np.arange(g.n0, dtype=np.int64)
        zeros = np.zeros(g.n0)
        n_admissible = np.zeros(g.n0, dtype=np.int64)
        cost_factor = (1.0 - math.exp(-lam * dt)) / lam
        disc_if = math.exp(-lam * dt)

        def emit_slide(f0_arr, ell_arr, admissible):
            foot_x0 = x0s + dt * f0_arr
            keep = admissible & in_x0(foot_x0)
            n_admissible[admissible] += 1
            idx, w = self._interp_entries(1, foot_x0, zeros)
            emit(gamma_nodes, idx, w, ell_arr * cost_factor, disc_if, keep)

        for plane in problem.shape.planes:
            f0s, fis, ells = [], [], []
            for atom in problem.atoms(plane):
                f0 = eval_coef_grid(atom.f0, x0s, zeros)
                fi = eval_coef_grid(atom.fi, x0s, zeros)
                ell = eval_coef_grid(atom.ell, x0s, zeros)
                f0s.append(f0)
                fis.append(fi)
                ells.append(ell)
                admissible = fi >= 0
                n_admissible[admissible] += 1
                foot_x0 = x0s + dt * f0
                foot_xi = np.maximum(0.0, dt * fi)
                keep = admissible & in_x0(foot_x0) & (foot_xi <= g.xi_max)
                idx, w = self._interp_entries(plane, foot_x0, foot_xi)
                emit(gamma_nodes, idx, w, ell * cost_factor, disc_if, keep)
            if problem.convexify:
                m = len(f0s)
                for a in range(m):
                    for b in range(m):
                        straddle = (fis[a] > 0) & (fis[b] < 0)
                        if not straddle.any():
                            continue
                        denom = np.where(straddle, fis[a] - fis[b], 1.0)
                        theta = np.where(straddle, -fis[b] / denom, 0.0)
                        f0m = theta * f0s[a] + (1 - theta) * f0s[b]
                        ellm = theta * ells[a] + (1 - theta) * ells[b]
                        emit_slide(f0m, ellm, straddle)
        for atom in problem.interface_controls:
            f0 = eval_coef_grid(atom.f0, x0s, zeros)
            ell = eval_coef_grid(atom.ell, x0s, zeros)
            emit_slide(f0, ell, np.ones(g.n0, dtype=bool))

        if (n_admissible == 0).any():
            bad = x0s[np.flatnonzero(n_admissible == 0)[0]]
            raise NormalControllabilityError(
                f"no admissible control at the interface node x0={bad:.6g}: every atom "
                "points out of its half-plane (normal-controllability assumption fails)")

        node = np.concatenate(nodes_l)
        order = np.argsort(node, kind="stable")
        node = node[order]
        self.idx = np.ascontiguousarray(np.concatenate(idx_l)[order])
        self.w = np.ascontiguousarray(np.concatenate(w_l)[order])
        self.cost = np.ascontiguousarray(np.concatenate(cost_l)[order])
        self.disc = np.ascontiguousarray(np.concatenate(disc_l)[order])
        counts = np.bincount(node, minlength=g.n_nodes)
        self.node_ptr = np.zeros(g.n_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=self.node_ptr[1:])
        self.flags = counts == 0

    # -- application --------------------------------------------------------

    def apply(self, v: np.ndarray) -> np.ndarray:
        """One Jacobi sweep: monotone, contracting in the sup norm."""
        out = np.empty_like(v)
        _kernel.sweep(self.node_ptr, self.idx, self.w, self.cost, self.disc,
                      self.safe_value, v, out)
        return out


def build_scheme(problem: JunctionProblem, grid: JunctionGrid, dt: float) -> SchemeOperator:
    return SchemeOperator(problem, grid, dt)


def value_iteration(problem: JunctionProblem, grid: JunctionGrid, dt: float,
                    tol: float = 1e-8, max_iter: int = 100_000,
                    threads: int | None = None) -> ValueField:
    """Iterate the scheme from the zero field until the sup-norm update is below tolerance.

    Stops when the sweep difference drops below tol * (1 - exp(-lam*dt)), which
    bounds the distance to the fixed point by ~tol; raises ConvergenceError
    after max_iter sweeps. ``threads`` pins the parallel thread count; results
    are bit-identical for any value.
    """
    import numba

    op = build_scheme(problem, grid, dt)
    stop = tol * (1.0 - math.exp(-problem.lam * dt))
    v = np.zeros(grid.n_nodes)
    history: list[float] = []
    old_threads = numba.get_num_threads()
    if threads is not None:
        numba.set_num_threads(threads)
    try:
        for it in range(1, max_iter + 1):
            nxt = op.apply(v)
            diff = float(np.max(np.abs(nxt - v)))
            history.append(diff)
            v = nxt
            if diff <= stop:
                return ValueField(grid, v, op.flags, it, dt, diff, True, tuple(history))
    finally:
        if threads is not None:
            numba.set_num_threads(old_threads)
    raise ConvergenceError(
        f"no convergence to tol={tol} within {max_iter} sweeps (last diff {history[-1]:.3e})")


def interpolate(field: ValueField, point: JunctionPoint) -> float:
    """Bilinear interpolation in the point's plane; interface points read the shared row."""
    g = field.grid
    if not (g.x0_min <= point.x0 <= g.x0_max) or point.xi > g.xi_max:
        raise DomainError(f"point ({point.plane},{point.x0},{point.xi}) outside the grid domain")
    u = (point.x0 - g.x0_min) / g.dx0
    col = min(int(u), g.n0 - 2)
    wx = min(max(u - col, 0.0), 1.0)
    if point.xi == 0.0:
        row_vals = field.values[: g.n0]
        return float((1 - wx) * row_vals[col] + wx * row_vals[col + 1])
    if not 1 <= point.plane <= g.n_planes:
        raise InvalidPointError(f"plane {point.plane} not in 1..{g.n_planes}")
    t = point.xi / g.dxi
    row = min(int(t), g.ni - 2)
    wy = min(max(t - row, 0.0), 1.0)
    v00 = field.values[g.flat_index(point.plane, row, col)]
    v01 = field.values[g.flat_index(point.plane, row, col + 1)]
    v10 = field.values[g.flat_index(point.plane, row + 1, col)]
    v11 = field.values[g.flat_index(point.plane, row + 1, col + 1)]
    return float((1 - wx) * (1 - wy) * v00 + wx * (1 - wy) * v01
                 + (1 - wx) * wy * v10 + wx * wy * v11)


# ---------------------------------------------------------------------------
# diagnostic operators


def sup_convolution_x0(field: ValueField, alpha: float, p_exp: float) -> ValueField:
    """Row-wise sup-convolution in the interface coordinate.

    Replaces each value by the exact discrete maximum over its row of
    u(z0) - (|z0 - x0|^2 / alpha^2 + alpha)^(p/2); the search window is cut
    where the penalty alone exceeds twice the field's sup norm (beyond it no
    candidate can win). The result is Lipschitz in x0 with a slope bounded by
    :func:`sup_convolution_slope_bound`.
    """
    if alpha <= 0 or p_exp <= 0:
        raise ValueError("alpha and p_exp must be positive")
    g = field.grid
    u_inf = float(np.max(np.abs(field.values)))
    r_max = alpha * math.sqrt(max(0.0,
                                  (2 * u_inf + alpha ** (p_exp / 2)) ** (2 / p_exp) - alpha))
    window = min(g.n0 - 1, int(math.ceil(r_max / g.dx0)) + 1)

    def pen(r: float) -> float:
        return (r * r / alpha ** 2 + alpha) ** (p_exp / 2)

    def convolve_row(row: np.ndarray) -> np.ndarray:
        out = row - pen(0.0)
        for d in range(1, window + 1):
            p_d = pen(d * g.dx0)
            np.maximum(out[d:], row[:-d] - p_d, out=out[d:])
            np.maximum(out[:-d], row[d:] - p_d, out=out[:-d])
        return out

    values = field.values.copy()
    values[: g.n0] = convolve_row(field.values[: g.n0])
    for plane in range(1, g.n_planes + 1):
        base = g.plane_base(plane)
        for r in range(g.ni - 1):
            sl = slice(base + r * g.n0, base + (r + 1) * g.n0)
            values[sl] = convolve_row(field.values[sl])
    return replace(field, values=values)


def sup_convolution_slope_bound(u_inf: float, alpha: float, p_exp: float,
                                extra_radius: float = 0.0) -> float:
    """Upper bound on the x0-slope of the sup-convolution with these parameters.

    The maximizer lives within r_max of the evaluation point, so the slope is
    bounded by the largest penalty derivative on [0, r_max + extra_radius];
    the maximum is located by a dense scan (the derivative is not monotone for
    small exponents).
    """
    r_max = alpha * math.sqrt(max(0.0,
                                  (2 * u_inf + alpha ** (p_exp / 2)) ** (2 / p_exp) - alpha))
    rs = np.linspace(0.0, r_max + extra_radius, 20001)
    deriv = (p_exp * rs / alpha ** 2
             * (rs ** 2 / alpha ** 2 + alpha) ** (p_exp / 2 - 1.0))
    return float(deriv.max())


@dataclass(frozen=True)
class GradientBoundReport:
    """Geodesic difference quotients of a field near the interface vs. the subsolution bound."""

    max_quotient: float
    c_star: float
    limit: float
    n_pairs: int
    n_violations: int
    delta: float
    m_u: float

    @property
    def ok(self) -> bool:
        return self.n_violations == 0


def gradient_bound_check(field: ValueField, problem: JunctionProblem, radius: float,
                         n_cross_pairs: int = 2000, seed: int = 0) -> GradientBoundReport:
    """Check the gradient bound 2*(lam*M_u + M_ell)/delta on quotients inside the tube.

    Quotients are taken between same-plane grid neighbours and randomly sampled
    cross-plane pairs joined through the interface, restricted to nodes with
    xi <= radius; the limit allows a grid slack of 2*dx*C_star.
    """
    g = field.grid
    m_u = float(np.max(np.abs(field.values)))
    deltas = [min(velocity_ball_radius(problem, JunctionPoint(1, float(x0), 0.0)))
              for x0 in g.x0_nodes[:: max(1, g.n0 // 16)]]
    delta = min(deltas)
    if delta <= 0:
        raise ValueError("gradient bound needs full controllability (velocity-ball radius > 0)")
    c_star = 2.0 * (problem.lam * m_u + problem.m_ell) / delta
    limit = c_star + 2.0 * max(g.dx0, g.dxi) * c_star
    n_rows = min(g.ni - 1, int(math.floor(radius / g.dxi)) + 1)
    max_q = 0.0
    n_pairs = n_viol = 0
    for plane in range(1, g.n_planes + 1):
        vals = field.plane_values(plane)[:n_rows + 1]
        qx = np.abs(np.diff(vals, axis=1)) / g.dx0
        qy = np.abs(np.diff(vals, axis=0)) / g.dxi
        for q in (qx, qy):
            if q.size:
                max_q = max(max_q, float(q.max()))
                n_pairs += q.size
                n_viol += int((q > limit).sum())
    rng = np.random.default_rng(seed)
    if g.n_planes >= 2 and n_rows >= 1:
        for _ in range(n_cross_pairs):
            pa, pb = rng.choice(np.arange(1, g.n_planes + 1), size=2, replace=False)
            ra, rb = rng.integers(1, n_rows + 1, size=2)
            ca, cb = rng.integers(0, g.n0, size=2)
            va = field.values[g.flat_index(int(pa), int(ra), int(ca))]
            vb = field.values[g.flat_index(int(pb), int(rb), int(cb))]
            dist = math.hypot((ca - cb) * g.dx0, (ra + rb) * g.dxi)
            q = abs(va - vb) / dist
            max_q = max(max_q, q)
            n_pairs += 1
            n_viol += int(q > limit)
    return GradientBoundReport(max_q, c_star, limit, n_pairs, n_viol, delta, m_u)


@dataclass(frozen=True)
class ContinuityReport:
    """One-sided extrapolated interface limits versus the shared interface row."""

    max_mismatch: float
    per_plane: tuple[float, ...]


def continuity_across_gamma(field: ValueField) -> ContinuityReport:
    """Linear one-sided extrapolation of each plane onto the interface vs. the stored row.

    The mismatch of a converged field vanishes at first order in the normal
    grid spacing when the underlying value function is continuous across the
    interface.
    """
    g = field.grid
    if g.ni < 3:
        raise ValueError("extrapolation needs at least two interior rows (ni >= 3)")
    row = field.values[: g.n0]
    per_plane = []
    for plane in range(1, g.n_planes + 1):
        vals = field.plane_values(plane)
        extrap = 2.0 * vals[1] - vals[2]
        per_plane.append(float(np.max(np.abs(extrap - row))))
    return ContinuityReport(max(per_plane), tuple(per_plane))


def write_value_csv(field: ValueField, plane: int, path) -> None:
    """Write one plane's values as CSV columns (plane, i0, ii, x0, xi, value, flagged)."""
    g = field.grid
    vals = field.plane_values(plane)
    flags = field.plane_flags(plane)
    x0s, xis = g.x0_nodes, g.xi_nodes
    with open(path, "w", newline="") as fh:
        fh.write("plane,i0,ii,x0,xi,value,flagged\n")
        for r in range(g.ni):
            for c in range(g.n0):
                fh.write(f"{plane},{c},{r},{float(x0s[c])!r},{float(xis[r])!r},"
                         f"{float(vals[r, c])!r},{int(flags[r, c])}\n")
