"""The two exactly computable models: disjoint points and the projective line.

* :mod:`augstab.models.points` -- augmented stability conditions on the
  category of ``n`` disjoint points, scale filtrations, directed distance
  and limits of sequences;
* :mod:`augstab.models.bessel` -- the Bessel coordinate of the stability
  manifold of the projective line, by two independent routes;
* :mod:`augstab.models.p1` -- the extended strip, the map ``F`` and
  boundary limits.
"""
from __future__ import annotations

from .bessel import BesselDomainError, p1_bessel_coordinate
from .p1 import F_map, P1Limit, P1Point, SIGMA0, p1_boundary_limit
from .points import (
    PointsAugStab,
    PointsObject,
    check_convergence,
    directed_distance,
    from_marked_line,
    points_ell,
    reconstruct_limit,
    scale_filtration,
)

__all__ = [
    "BesselDomainError",
    "p1_bessel_coordinate",
    "F_map",
    "P1Limit",
    "P1Point",
    "SIGMA0",
    "p1_boundary_limit",
    "PointsAugStab",
    "PointsObject",
    "check_convergence",
    "directed_distance",
    "from_marked_line",
    "points_ell",
    "reconstruct_limit",
    "scale_filtration",
]
