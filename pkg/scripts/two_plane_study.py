#!/usr/bin/env python3
"""Refinement study for the two-plane benchmark.

Solves the cost-1-against-cost-0 disc problem at a ladder of resolutions,
compares the plane-1 field with the one-dimensional closed form
1 - exp(-xi), and cross-checks a handful of points against the brute-force
law-enumeration oracle. Writes per-plane CSVs for the finest level.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from junctionhjb import (
    JunctionGrid,
    JunctionPoint,
    brute_force_value,
    disc_family,
    interface_point,
    interpolate,
    value_iteration,
    write_value_csv,
)
from junctionhjb.geometry import JunctionShape
from junctionhjb.problem import JunctionProblem


def build_problem(n_samples: int) -> JunctionProblem:
    atoms1 = disc_family("d1", 1.0, 1.0, n_samples)
    atoms2 = disc_family("d2", 1.0, 0.0, n_samples)
    return JunctionProblem(JunctionShape(2), (tuple(atoms1), tuple(atoms2)),
                           lam=1.0, m_f=1.0, m_ell=1.0, l_f=0.0, l_ell=0.0)


def closed_form(xi):
    return 1.0 - np.exp(-np.asarray(xi))


def inner_window_error(field, grid):
    x0, xi = np.meshgrid(grid.x0_nodes, grid.xi_nodes, indexing="xy")
    window = (np.abs(x0) <= 1.0) & (xi <= 1.0) & ~field.plane_flags(1)
    return float(np.abs(field.plane_values(1) - closed_form(xi))[window].max())


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--samples", type=int, default=64)
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--out", default="out_two_plane")
    args = ap.parse_args()

    problem = build_problem(args.samples)
    print(f"{'grid':>10} {'dt':>8} {'sweeps':>7} {'err':>10} {'ratio':>7} {'time':>7}")
    prev_err = None
    field = None
    for level in range(args.levels):
        scale = 2 ** level
        grid = JunctionGrid(2, -2.0, 2.0, 100 * scale + 1, 2.0, 50 * scale + 1)
        dt = 0.02 / scale
        t0 = time.perf_counter()
        field = value_iteration(problem, grid, dt, tol=args.tol)
        err = inner_window_error(field, grid)
        ratio = f"{err / prev_err:7.3f}" if prev_err else "      -"
        print(f"{grid.n0}x{grid.ni:>5} {dt:8.4f} {field.iterations:7d} "
              f"{err:10.2e} {ratio} {time.perf_counter() - t0:6.1f}s")
        prev_err = err

    print("\noracle cross-check on the finest field:")
    points = [JunctionPoint(1, 0.0, 0.5), JunctionPoint(1, -0.5, 1.0),
              JunctionPoint(2, 0.3, 0.5), interface_point(0.25)]
    for pt in points:
        seg = pt.xi / 2 if pt.plane == 1 else 0.5
        oracle, bracket = brute_force_value(problem, pt, 2, seg, dt=1 / 64)
        solver = interpolate(field, pt)
        print(f"  ({pt.plane},{pt.x0:+.2f},{pt.xi:.2f}): solver {solver:.6f} "
              f"oracle {oracle:.6f} |diff| {abs(solver - oracle):.2e} bracket {bracket:.3f}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for plane in (1, 2):
        write_value_csv(field, plane, out / f"plane_{plane}.csv")
    print(f"\nwrote finest-level CSVs to {out}/")


if __name__ == "__main__":
    main()
