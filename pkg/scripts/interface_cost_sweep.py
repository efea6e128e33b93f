#!/usr/bin/env python3
"""Interface-control experiment: how the interface row tracks the cheapest stationary cost.

Both planes carry unit-cost disc dynamics; a stationary interface control of
cost c0 is swept over a range. Whenever c0 is below the plane costs the
interface row of the converged field should equal c0 / lambda, and the
one-sided limits from the planes should approach it continuously.
"""

import argparse

import numpy as np

from junctionhjb import (
    JunctionGrid,
    continuity_across_gamma,
    disc_family,
    interface_atom,
    value_iteration,
)
from junctionhjb.geometry import JunctionShape
from junctionhjb.problem import JunctionProblem


def build_problem(c0: float, n_samples: int) -> JunctionProblem:
    atoms1 = disc_family("d1", 1.0, 1.0, n_samples)
    atoms2 = disc_family("d2", 1.0, 1.0, n_samples)
    return JunctionProblem(JunctionShape(2), (tuple(atoms1), tuple(atoms2)),
                           lam=1.0, m_f=1.0, m_ell=1.0, l_f=0.0, l_ell=0.0,
                           interface_controls=(interface_atom("hold", 0.0, c0),))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=32)
    ap.add_argument("--tol", type=float, default=1e-7)
    args = ap.parse_args()

    grid = JunctionGrid(2, -2.0, 2.0, 101, 2.0, 51)
    print(f"{'c0':>5} {'row value':>10} {'|row-c0|':>9} {'cross-mismatch':>15}")
    for c0 in (0.0, 0.2, 0.4, 0.6, 0.8):
        problem = build_problem(c0, args.samples)
        field = value_iteration(problem, grid, 0.01, tol=args.tol)
        row = float(np.mean(field.interface_values()))
        mismatch = continuity_across_gamma(field).max_mismatch
        print(f"{c0:5.2f} {row:10.6f} {abs(row - c0):9.2e} {mismatch:15.2e}")


if __name__ == "__main__":
    main()
