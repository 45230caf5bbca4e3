"""Waveform design and evaluation for MIMO multifunction (radar, communication,
jamming) transmitters."""

from .array_model import (
    ArrayGeometry,
    DirectionSet,
    lift_direction,
    lift_target,
    normalized_beampattern,
    normalized_gain,
    rx_steering,
    steering_matrix,
    tx_steering,
)
from .disturbance import (
    GeneralCovariance,
    StructuredCovariance,
    quadratic_form_matrix,
    receive_sinr,
    spatial_covariance,
    sqrt_operator,
)
from .energy_solver import (
    NullSpaceParam,
    Scenario,
    parameterize,
    radar_only_optimum,
    solve_general,
    solve_secular,
)
from .errors import (
    ConditioningError,
    DomainError,
    InfeasibleError,
    MfrfError,
    MonotonicityError,
    NumericalError,
)
from .papr_solver import (
    MatchingTolerances,
    PaprConstraint,
    admm_solve,
    mm_inner_solve,
    papr,
    papr_project,
)
from .report import SolverReport, db
from .signals_eval import (
    DesiredSignalSpec,
    DetectionSpec,
    comm_sinr,
    detection_probability,
    generate_desired,
    jamming_power,
    normality_check,
    ser_monte_carlo,
    sum_rate,
    sum_rate_lower_bound,
)
from .structured_solver import (
    StructuredSolution,
    approximate_sinr,
    coherent_case,
    sinr_bound_case2,
    solve_structured,
    transmit_sinr,
)

__version__ = "0.1.0"
