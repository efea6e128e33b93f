"""Optimal control on junctions of half-planes.

Library surface: intrinsic geometry, finite-atom control problems with
assumption checkers, exact Hamiltonian evaluators, admissible-trajectory
integration with brute-force value oracles, and a semi-Lagrangian value
iteration solver with diagnostic operators. The ``junctionhjb`` CLI drives all
of it from declarative problem files.
"""

from .geometry import (
    INTERFACE_PLANE,
    JunctionPoint,
    JunctionShape,
    canonicalize,
    dist_to_interface,
    geodesic_distance,
    interface_point,
)
from .problem import (
    AffineCoef,
    ControlAtom,
    Domain,
    JunctionProblem,
    VelocityCost,
    constant_atom,
    controllability_radius,
    convexity_gap,
    disc_family,
    estimate_regularity,
    interface_atom,
    mixed_atom,
    nonexit_set,
    normal_span_radius,
    pair_mixtures,
    velocity_ball_radius,
    velocity_cost_set,
    zero_normal_mixing,
)
from .hamiltonians import (
    Covector,
    ShiftInterval,
    admissible_interface_set,
    hamiltonian,
    hamiltonian_nonexit,
    interface_hamiltonian,
    regularity_report,
    relaxed_generators,
    shift_minimizers,
    tangential_hamiltonian,
    tangential_hamiltonian_plane,
)
from .trajectories import (
    ControlLaw,
    CostResult,
    Crossing,
    Trajectory,
    brute_force_value,
    dpp_residual,
    integrate,
    trajectory_cost,
    write_trajectory_csv,
)
from .solver import (
    ContinuityReport,
    GradientBoundReport,
    JunctionGrid,
    SchemeOperator,
    ValueField,
    build_scheme,
    continuity_across_gamma,
    gradient_bound_check,
    interpolate,
    sup_convolution_slope_bound,
    sup_convolution_x0,
    value_iteration,
    write_value_csv,
)
from .schema import ProblemFile, parse_problem_file, serialize
from . import errors

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
