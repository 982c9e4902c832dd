"""qkinopt: quantum-search optimization of planar manipulator kinematics.

Simulates the full pipeline at desk scale: discretize manipulator parameters
into qubit registers, optionally train a parameterized-circuit surrogate of
the forward kinematics, build a diagonal cost oracle, amplify low-cost
configurations with Grover iterations, and verify the measured solution
against the analytical model. Classical optimizers run on the same
objectives for query-count comparison.
"""

from .encoding import ParamGrid, ParamSpec, bin_width, decode, encode
from .grover import (
    GroverPlan,
    NoSolutionError,
    OracleSpec,
    SearchResult,
    adaptive_search,
    grover_search,
    iteration_count,
    success_probability_analytic,
    verify,
)
from .harness import (
    CaseConfig,
    RunReport,
    compare,
    dual_arm_case,
    emit_report,
    load_config,
    one_dof_case,
    run_baselines,
    run_case,
    two_dof_case,
)
from .kinematics import (
    DualArm,
    GraspTask,
    OneLink,
    PoseTarget,
    PoseWeights,
    TwoLink,
)
from .qml import Surrogate, TrainingSet, build_ansatz, build_cost_table, make_surrogate, train
from .qsim import CapacityError, StateVector, measure, uniform_superposition

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "CaseConfig",
    "DualArm",
    "GraspTask",
    "GroverPlan",
    "NoSolutionError",
    "OneLink",
    "OracleSpec",
    "ParamGrid",
    "ParamSpec",
    "PoseTarget",
    "PoseWeights",
    "RunReport",
    "SearchResult",
    "StateVector",
    "Surrogate",
    "TrainingSet",
    "TwoLink",
    "adaptive_search",
    "bin_width",
    "build_ansatz",
    "build_cost_table",
    "compare",
    "decode",
    "dual_arm_case",
    "emit_report",
    "encode",
    "grover_search",
    "iteration_count",
    "load_config",
    "make_surrogate",
    "measure",
    "one_dof_case",
    "run_baselines",
    "run_case",
    "success_probability_analytic",
    "train",
    "two_dof_case",
    "uniform_superposition",
    "verify",
]
