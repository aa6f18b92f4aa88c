"""Learning observability-guaranteeing sensor allocations for unknown linear systems."""

__version__ = "0.1.0"

from .allocation import (  # noqa: E402
    AllocationResult,
    RankEstimator,
    default_threshold,
    estimate_rank,
    greedy_allocate,
    hankel_matrix,
    observability_matrix,
)
from .errors import (  # noqa: E402
    InsufficientExcitationError,
    NotObservableWithinCandidates,
    ObsAllocError,
    PreconditionError,
    RankDeficiencyError,
)
from .linsys import (  # noqa: E402
    StabilityParams,
    SystemModel,
    TrajectoryData,
    controllability_matrix,
    is_controllable,
    markov_parameters,
    simulate_trajectory,
    verify_stability,
)
from .measurement import (  # noqa: E402
    CoverageStats,
    MeasurementMatrix,
    Schedule,
    coverage,
    cyclic_schedule,
    cyclic_schedule_restricted,
)
from .oracle import exact_observability_rank, minimal_sensor_count, power_perturbation_check  # noqa: E402
from .sysid import (  # noqa: E402
    MarkovEstimate,
    RecoveredSystem,
    build_regressor,
    estimate_markov,
    ho_kalman,
    identify,
    markov_error,
    recover_ab,
)
