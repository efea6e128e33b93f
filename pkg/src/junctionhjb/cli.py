"""Batch front-end: solve / check / rollout / compare / eval-hamiltonian.

One problem file drives every subcommand, so the solver, the checkers and the
brute-force oracle always see the identical problem. Outputs are CSV and JSON
for external plotting.

Exit codes: 0 success, 1 comparison failure or unexpected error, 2 schema
error, 3 non-convergence, 4 infeasible law, 5 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .errors import (
    BudgetExceededError,
    ConvergenceError,
    InfeasibleTrajectoryError,
    SchemaError,
)
from .geometry import JunctionPoint, interface_point
from .hamiltonians import (
    Covector,
    hamiltonian,
    hamiltonian_nonexit,
    interface_hamiltonian,
    shift_minimizers,
    tangential_hamiltonian,
)
from .problem import (
    controllability_radius,
    convexity_gap,
    estimate_regularity,
    normal_span_radius,
    velocity_ball_radius,
)
from .schema import ProblemFile, parse_problem_file
from .solver import interpolate, value_iteration, write_value_csv
from .trajectories import ControlLaw, brute_force_value, integrate, trajectory_cost, \
    write_trajectory_csv

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_SCHEMA = 2
EXIT_NO_CONVERGENCE = 3
EXIT_INFEASIBLE = 4
EXIT_BUDGET = 5


def _parse_point(text: str) -> JunctionPoint:
    parts = text.split(",")
    if len(parts) != 3:
        raise SchemaError(f"point must be 'plane,x0,xi', got {text!r}")
    plane, x0, xi = int(parts[0]), float(parts[1]), float(parts[2])
    if xi == 0.0:
        return interface_point(x0)
    return JunctionPoint(plane, x0, xi)


def _load(path: str) -> ProblemFile:
    return parse_problem_file(path)


def cmd_solve(args) -> int:
    pf = _load(args.problem_file)
    dt = args.dt if args.dt is not None else pf.dt
    tol = args.tol if args.tol is not None else pf.tol
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        field = value_iteration(pf.problem, pf.grid, dt, tol=tol, max_iter=pf.max_iter,
                                threads=args.threads)
    except ConvergenceError as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    elapsed = time.perf_counter() - t0
    for plane in range(1, pf.grid.n_planes + 1):
        write_value_csv(field, plane, out_dir / f"plane_{plane}.csv")
    report = {
        "schema_version": 1,
        "converged": field.converged,
        "iterations": field.iterations,
        "residual": field.final_diff,
        "dt": field.dt,
        "tol": tol,
        "grid": {"n0": pf.grid.n0, "ni": pf.grid.ni, "n_planes": pf.grid.n_planes,
                 "x0": [pf.grid.x0_min, pf.grid.x0_max], "xi_max": pf.grid.xi_max},
        "problem_hash": pf.problem_hash(),
        "flagged_nodes": int(field.flagged.sum()),
        "timing_s": elapsed,
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=2))
    print(f"converged in {field.iterations} sweeps, residual {field.final_diff:.3e}, "
          f"{elapsed:.2f}s; wrote {pf.grid.n_planes} plane CSVs to {out_dir}")
    return EXIT_OK


def cmd_check(args) -> int:
    pf = _load(args.problem_file)
    problem, domain = pf.problem, pf.domain
    reg = estimate_regularity(problem, domain, n_samples=args.samples, seed=args.seed)
    mid = interface_point(0.5 * (domain.x0_min + domain.x0_max))
    gaps = [convexity_gap(problem, i, mid) for i in problem.shape.planes]
    ball = velocity_ball_radius(problem, mid)
    span = normal_span_radius(problem, mid)
    r_ball = controllability_radius(problem, domain, mode="ball")
    r_span = controllability_radius(problem, domain, mode="normal")
    report = {
        "bounds": {"M_f_est": reg.m_f_est, "M_ell_est": reg.m_ell_est,
                   "L_f_est": reg.l_f_est, "omega_ell_est": reg.omega_ell_est,
                   "violations": list(reg.violations)},
        "convexity_gap": gaps,
        "velocity_ball_radius": ball,
        "normal_span_radius": span,
        "tube_radius_ball": r_ball,
        "tube_radius_normal": r_span,
    }
    print(f"bounds: |f| <= {reg.m_f_est:.6g} (declared {problem.m_f}), "
          f"|ell| <= {reg.m_ell_est:.6g} (declared {problem.m_ell})")
    print(f"Lipschitz: f {reg.l_f_est:.6g} (declared {problem.l_f}), "
          f"cost slope {reg.omega_ell_est:.6g}")
    for v in reg.violations:
        print(f"VIOLATION: {v}")
    print(f"convexity gap per plane: {', '.join(f'{v:.6g}' for v in gaps)}")
    print(f"velocity-ball radius per plane: {', '.join(f'{v:.6g}' for v in ball)}")
    print(f"normal-span radius per plane: {', '.join(f'{v:.6g}' for v in span)}")
    flagged = [i + 1 for i, v in enumerate(span) if v <= 0]
    if flagged:
        print(f"FLAG: normal controllability fails on planes {flagged}")
    print(f"controllability tube radius: ball {r_ball:.6g}, normal {r_span:.6g}")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2))
    return EXIT_OK


def _read_law(path: str) -> ControlLaw:
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict):
        doc = doc.get("schedule", doc)
    try:
        pieces = tuple((float(p["duration"]), str(p["atom"])) for p in doc)
        return ControlLaw(pieces)
    except (TypeError, KeyError, ValueError) as exc:
        raise SchemaError(f"law file {path}: expected a list of "
                          f"{{'duration': t, 'atom': id}} entries ({exc})") from exc


def cmd_rollout(args) -> int:
    pf = _load(args.problem_file)
    law = _read_law(args.law)
    start = _parse_point(args.start)
    dt = args.dt if args.dt is not None else pf.dt
    traj = integrate(pf.problem, start, law, dt)
    write_trajectory_csv(traj, args.out)
    if not traj.feasible:
        print(f"law infeasible at t={traj.end_time:.6g}: {traj.infeasible_reason}",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    res = trajectory_cost(pf.problem, traj)
    print(f"feasible over [0, {traj.end_time:.6g}]; discounted cost {res.value:.10g} "
          f"(+/- tail {res.truncation_bound:.3e}); {len(traj.crossings)} interface events")
    return EXIT_OK


def cmd_compare(args) -> int:
    pf = _load(args.problem_file)
    dt = args.dt if args.dt is not None else pf.dt
    try:
        field = value_iteration(pf.problem, pf.grid, dt, tol=pf.tol, max_iter=pf.max_iter,
                                threads=args.threads)
    except ConvergenceError as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    points = [_parse_point(p) for p in args.point]
    n_seg = args.segments
    seg = args.seg_duration
    odt = args.oracle_dt if args.oracle_dt is not None else dt
    all_pass = True
    print(f"{'point':>18} {'solver':>12} {'oracle':>12} {'bracket':>10} pass")
    for pt in points:
        solver_val = interpolate(field, pt)
        oracle_val, bracket = brute_force_value(pf.problem, pt, n_seg, seg, odt,
                                                budget=args.budget)
        ok = abs(solver_val - oracle_val) <= bracket
        all_pass &= ok
        label = f"({pt.plane},{pt.x0:g},{pt.xi:g})"
        print(f"{label:>18} {solver_val:12.6f} {oracle_val:12.6f} {bracket:10.4f} "
              f"{'yes' if ok else 'NO'}")
    return EXIT_OK if all_pass else EXIT_FAIL


def cmd_eval_hamiltonian(args) -> int:
    pf = _load(args.problem_file)
    problem = pf.problem
    x0, xi = (float(v) for v in args.point.split(","))
    p0, pi = (float(v) for v in args.covector.split(","))
    p = Covector(p0, pi)
    if xi > 0:
        if args.gamma:
            print("interface quantities require a point on the interface (xi == 0)",
                  file=sys.stderr)
            return EXIT_SCHEMA
        x = JunctionPoint(args.plane, x0, xi)
        print(f"H_plane[{args.plane}](x, p) = {hamiltonian(problem, args.plane, x, p)!r}")
        return EXIT_OK
    x = interface_point(x0)
    print(f"H_plane[{args.plane}](x, p) = {hamiltonian(problem, args.plane, x, p)!r}")
    if not args.gamma:
        return EXIT_OK
    print(f"H_nonexit[{args.plane}](x, p) = "
          f"{hamiltonian_nonexit(problem, args.plane, x, p)!r}")
    covs = [p] * problem.shape.n_planes
    print(f"H_interface(x, p...) = {interface_hamiltonian(problem, x, covs)!r}")
    print(f"H_tangential(x, p0) = {tangential_hamiltonian(problem, x, p0)!r}")
    interval = shift_minimizers(problem, args.plane, x, p)
    print(f"shift minimizers[{args.plane}]: [{interval.delta_min!r}, {interval.delta_max!r}]"
          f", min value {interval.value!r}")
    shifted = hamiltonian(problem, args.plane, x, p.shifted(interval.delta_min))
    print(f"identity check: H(x, p + d* e_i) = {shifted!r} "
          f"(|diff| = {abs(shifted - interval.value):.2e})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="junctionhjb",
                                 description="optimal control on junctions of half-planes")
    sub = ap.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run value iteration, write value CSVs and a report")
    solve.add_argument("problem_file")
    solve.add_argument("--out", required=True)
    solve.add_argument("--dt", type=float, default=None)
    solve.add_argument("--tol", type=float, default=None)
    solve.add_argument("--threads", type=int, default=None)
    solve.set_defaults(func=cmd_solve)

    check = sub.add_parser("check", help="run the assumption checkers")
    check.add_argument("problem_file")
    check.add_argument("--samples", type=int, default=200)
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--out", default=None, help="also write the JSON report here")
    check.set_defaults(func=cmd_check)

    roll = sub.add_parser("rollout", help="integrate a control law and export the trajectory")
    roll.add_argument("problem_file")
    roll.add_argument("--start", required=True, help="plane,x0,xi")
    roll.add_argument("--law", required=True, help="JSON law file")
    roll.add_argument("--out", required=True, help="trajectory CSV path")
    roll.add_argument("--dt", type=float, default=None)
    roll.set_defaults(func=cmd_rollout)

    comp = sub.add_parser("compare", help="solver vs. brute-force oracle at chosen points")
    comp.add_argument("problem_file")
    comp.add_argument("--point", action="append", required=True, help="plane,x0,xi (repeatable)")
    comp.add_argument("--segments", type=int, default=2)
    comp.add_argument("--seg-duration", type=float, default=0.5)
    comp.add_argument("--oracle-dt", type=float, default=None)
    comp.add_argument("--budget", type=int, default=1_000_000)
    comp.add_argument("--dt", type=float, default=None)
    comp.add_argument("--threads", type=int, default=None)
    comp.set_defaults(func=cmd_compare)

    ev = sub.add_parser("eval-hamiltonian", help="print Hamiltonian values at a point")
    ev.add_argument("problem_file")
    ev.add_argument("--plane", type=int, default=1)
    ev.add_argument("--point", required=True, help="x0,xi")
    ev.add_argument("--covector", required=True, help="p0,pi")
    ev.add_argument("--gamma", action="store_true",
                    help="also print the interface quantities (requires xi == 0)")
    ev.set_defaults(func=cmd_eval_hamiltonian)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InfeasibleTrajectoryError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main(argv=sys.argv[1:]))
