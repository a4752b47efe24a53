"""System classes and trajectory generation."""

from .billiard import (
    BilliardState,
    BilliardTable,
    Scatterer,
    billiard_step,
    boundary_arc_distance,
    default_table,
    sample_boundary_states,
)
from .coupled import CoupledMapSystem, coupled_step
from .series import (
    CALIBRATION_INDEX,
    IIDUniformSystem,
    generate_series,
    initial_states,
    observable_trajectory_batch,
    stream,
)
from .toral import (
    PeriodicPointOnLine,
    ToralAutomorphism,
    cat_map,
    eigen_data,
    find_periodic_points,
    periodic_points_exact,
    segment_periodic_intersection,
)
from .trajio import load_trajectory, save_trajectory

__all__ = [
    "BilliardState",
    "BilliardTable",
    "Scatterer",
    "billiard_step",
    "boundary_arc_distance",
    "default_table",
    "sample_boundary_states",
    "CoupledMapSystem",
    "coupled_step",
    "CALIBRATION_INDEX",
    "IIDUniformSystem",
    "generate_series",
    "initial_states",
    "observable_trajectory_batch",
    "stream",
    "PeriodicPointOnLine",
    "ToralAutomorphism",
    "cat_map",
    "eigen_data",
    "find_periodic_points",
    "periodic_points_exact",
    "segment_periodic_intersection",
    "load_trajectory",
    "save_trajectory",
]
