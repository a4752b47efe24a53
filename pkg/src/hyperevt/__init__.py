"""hyperevt: extreme value statistics for chaotic dynamical systems.

Simulates hyperbolic torus automorphisms, dispersing billiards and
all-to-all coupled expanding circle maps; evaluates observables maximised
on line segments and synchrony subspaces; estimates extremal indices from
trajectories; and checks the estimates against closed-form predictions.
"""

from .diagnostics import AqRatio, ReturnSumReport, aq_ratio, short_return_sum
from .errors import (
    ConfigError,
    DataError,
    FitError,
    HyperevtError,
    InfiniteHorizonError,
    InsufficientExceedancesError,
    InsufficientSamplesError,
    NumericalError,
    RangeError,
    UnsupportedSystemError,
)
from .evt import (
    ClusterStatistics,
    EIEstimate,
    EvlPoint,
    GevFit,
    block_maxima,
    blocks_ei,
    calibrate_threshold,
    empirical_evl_curve,
    estimate_ei,
    extract_clusters,
    fit_gev,
    l_moments,
    runs_ei,
    sample_gev,
    suveges_ei,
    threshold_at,
)
from .geometry import (
    Alignment,
    AlignmentClass,
    LineSegment,
    circle_distance,
    classify_alignment,
    segment_distance,
    wrap,
    wrap_half,
)
from .observables import (
    BoundaryLine,
    ObservableKind,
    ObservableSpec,
    block_max_deviation,
    observable_series,
    observable_value,
)
from .systems import (
    BilliardState,
    BilliardTable,
    CoupledMapSystem,
    IIDUniformSystem,
    Scatterer,
    ToralAutomorphism,
    billiard_step,
    cat_map,
    coupled_step,
    default_table,
    eigen_data,
    find_periodic_points,
    generate_series,
    load_trajectory,
    observable_trajectory_batch,
    periodic_points_exact,
    sample_boundary_states,
    save_trajectory,
    segment_periodic_intersection,
    stream,
)
from .theory import (
    ThetaPrediction,
    escape_overlap_theta,
    predict_for,
    predict_theta_billiard,
    predict_theta_coupled,
    predict_theta_toral,
)

__version__ = "0.1.0"
