"""Intrinsic geometry of a junction of half-planes.

The state space is a union of N half-planes glued along a common line (the
interface). A point is stored in intrinsic coordinates: the plane it belongs
to, its coordinate x0 along the interface direction, and its distance xi >= 0
to the interface. Interface points (xi == 0) are shared by all planes; the
canonical representative carries the reserved plane marker 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidPointError

INTERFACE_PLANE = 0


@dataclass(frozen=True)
class JunctionPoint:
    """Point on the junction in intrinsic coordinates (plane, x0, xi)."""

    plane: int
    x0: float
    xi: float

    def __post_init__(self) -> None:
        if self.xi < 0:
            raise InvalidPointError(f"xi must be >= 0, got {self.xi}")
        if self.plane < 0:
            raise InvalidPointError(f"plane index must be >= 0, got {self.plane}")

    @property
    def on_interface(self) -> bool:
        return self.xi == 0.0


@dataclass(frozen=True)
class JunctionShape:
    """Number of half-planes glued along the interface. Requires N >= 2."""

    n_planes: int

    def __post_init__(self) -> None:
        if self.n_planes < 2:
            raise InvalidPointError(f"a junction needs at least 2 half-planes, got {self.n_planes}")

    @property
    def planes(self) -> range:
        return range(1, self.n_planes + 1)


def interface_point(x0: float) -> JunctionPoint:
    """Canonical interface point at coordinate x0."""
    return JunctionPoint(INTERFACE_PLANE, x0, 0.0)


def canonicalize(p: JunctionPoint) -> JunctionPoint:
    """Map interface points to their canonical representative; identity off the interface.

    Idempotent. Two points with xi == 0 and equal x0 compare equal after
    canonicalization regardless of the plane index they were created with.
    """
    if p.xi == 0.0 and p.plane != INTERFACE_PLANE:
        return interface_point(p.x0)
    return p


def dist_to_interface(p: JunctionPoint) -> float:
    """Distance from p to the interface; by the intrinsic decomposition this is xi."""
    return p.xi


def geodesic_distance(x: JunctionPoint, y: JunctionPoint) -> float:
    """Shortest-path distance on the junction.

    Same plane (or either point on the interface): the planar Euclidean
    distance sqrt((x0-y0)^2 + (xi-yi)^2). Different planes: the optimal path
    passes through the interface and the distance is
    sqrt((x0-y0)^2 + (xi+yi)^2).
    """
    same_side = x.plane == y.plane or x.xi == 0.0 or y.xi == 0.0
    if same_side:
        return math.hypot(x.x0 - y.x0, x.xi - y.xi)
    return math.hypot(x.x0 - y.x0, x.xi + y.xi)
