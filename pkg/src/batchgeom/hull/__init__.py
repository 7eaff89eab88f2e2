"""Convex hulls in two and three dimensions."""

from .culling import DEFAULT_CULL_THRESHOLD, hull_divide_conquer, hull_pseudo_quickhull, pseudohull_cull
from .incremental import (
    DEFAULT_ROUND_MULTIPLIER,
    FALLBACK_FACETS,
    hull3d_quickhull,
    hull3d_randinc,
    hull_quickhull,
    hull_randinc,
    process_point,
    reserve_round,
    serial_quickhull,
    single_point_fallback,
    visible_facets,
)
from .mesh import HullConsistencyError, HullMesh, HullStats, init_simplex, mesh_problems
from .planar import hull2d_quickhull

__all__ = [
    "DEFAULT_CULL_THRESHOLD",
    "DEFAULT_ROUND_MULTIPLIER",
    "FALLBACK_FACETS",
    "HullConsistencyError",
    "HullMesh",
    "HullStats",
    "hull2d_quickhull",
    "hull3d_quickhull",
    "hull3d_randinc",
    "hull_divide_conquer",
    "hull_pseudo_quickhull",
    "hull_quickhull",
    "hull_randinc",
    "init_simplex",
    "mesh_problems",
    "process_point",
    "pseudohull_cull",
    "reserve_round",
    "serial_quickhull",
    "single_point_fallback",
    "visible_facets",
]
