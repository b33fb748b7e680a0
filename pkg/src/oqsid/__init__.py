"""oqsid: identification of Kraus channels and Lindblad master equations
from density-matrix time series, plus the Monte-Carlo fidelity experiments
built on top of the identification methods."""

from .dynamics import (
    KrausSet,
    LindbladModel,
    TimeSeries,
    apply_kraus,
    dephasing_model,
    lindbladian_apply,
    lindbladian_superoperator,
    mix_noise,
    propagate_kraus,
    propagate_lindblad,
    random_density_matrix,
    random_hermitian,
    random_jump_operator,
    random_model,
)
from .experiments import (
    ExperimentConfig,
    TrialRecord,
    report,
    run_experiment,
    run_trial,
    split_seed,
    summarize,
)
from .linalg import (
    anticommutator,
    commutator,
    dagger,
    devectorize,
    frobenius_norm,
    hermitian_part,
    matrix_exp,
    psd_sqrt,
    sandwich_superop,
    validate_density_matrix,
    vectorize,
)
from .metrics import (
    METHODS,
    IdentifiedModel,
    NonPhysicalTrajectory,
    build_objective,
    fidelity,
    identify,
    min_fidelity,
    repropagate,
)
from .objectives import (
    ObjectiveFunction,
    ParameterLayout,
    cumulative_integral,
    integral_objective,
    kraus_objective,
    kraus_single_step_objective,
    pade_objective,
)
from .optimize import (
    OptimizationResult,
    OptimizerConfig,
    basin_hopping,
    bfgs_minimize,
    finite_diff_gradient,
)

__version__ = "0.1.0"
