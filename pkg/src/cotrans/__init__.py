"""Cooperative object transport by velocity-controlled pushing robots.

A team of spherical robots pushes a spherical object so that its velocity
tracks a commanded signal. Pushing forces are allocated by a strictly
convex nonnegativity-constrained QP, robots servo to virtual targets on
the object boundary, and gain choices are certified by an empirical
small-gain test. See the README for the scenario file format and CLI.
"""

from ._kernels import BACKEND
from .analysis import (
    GainCertificate,
    GainCertificateInput,
    certify_scenario,
    check_small_gain,
    comparison_matrix,
    empirical_delta,
    sampled_delta_bound,
)
from .controller import (
    CircularCommand,
    CommandSignal,
    ConstantCommand,
    ControlOutput,
    ControllerGains,
    ZeroCommand,
    command_signal,
    control_step,
    robot_velocity_commands,
    virtual_positions,
)
from .dynamics import (
    BodyGeometry,
    CenterCoincidence,
    SystemState,
    contact_force,
    estimate_force_lipschitz,
    net_force,
    per_robot_forces,
    state_derivative,
)
from .geometry import (
    DirectionSet,
    NoPositiveBasis,
    evenly_spaced_directions,
    is_nwise_independent,
    is_positively_spanning,
    positive_combination_basis,
)
from .qp import (
    Ambiguous,
    MaxIterations,
    NoKktPoint,
    NotPositiveDefinite,
    QpProblem,
    QpSolution,
    assemble_qp,
    estimate_solution_lipschitz,
    kkt_residuals,
    solve_qp,
    solve_qp_oracle,
)
from .scenario_io import ParseError, SchemaError, parse_scenario
from .simulation import (
    HardInvalid,
    MetricsSummary,
    ScenarioConfig,
    TrajectoryLog,
    ValidationReport,
    fit_circle,
    metrics,
    run,
    step,
    validate_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    # geometry
    "DirectionSet",
    "NoPositiveBasis",
    "evenly_spaced_directions",
    "is_positively_spanning",
    "is_nwise_independent",
    "positive_combination_basis",
    # qp
    "QpProblem",
    "QpSolution",
    "NotPositiveDefinite",
    "MaxIterations",
    "NoKktPoint",
    "Ambiguous",
    "assemble_qp",
    "solve_qp",
    "solve_qp_oracle",
    "kkt_residuals",
    "estimate_solution_lipschitz",
    # dynamics
    "BodyGeometry",
    "SystemState",
    "CenterCoincidence",
    "contact_force",
    "per_robot_forces",
    "net_force",
    "state_derivative",
    "estimate_force_lipschitz",
    # controller
    "CommandSignal",
    "CircularCommand",
    "ConstantCommand",
    "ZeroCommand",
    "ControllerGains",
    "ControlOutput",
    "command_signal",
    "virtual_positions",
    "robot_velocity_commands",
    "control_step",
    # simulation
    "ScenarioConfig",
    "ValidationReport",
    "TrajectoryLog",
    "MetricsSummary",
    "HardInvalid",
    "validate_scenario",
    "step",
    "run",
    "metrics",
    "fit_circle",
    # analysis
    "GainCertificateInput",
    "GainCertificate",
    "comparison_matrix",
    "check_small_gain",
    "certify_scenario",
    "empirical_delta",
    "sampled_delta_bound",
    # scenario files
    "ParseError",
    "SchemaError",
    "parse_scenario",
]
