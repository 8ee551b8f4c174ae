"""KernelSHAP with stratified coalition sampling without replacement.

Coalition budgets are spread over size strata by the Wallenius mean, pairs
are drawn by simple random sampling, kernel weights are divided by inclusion
probabilities, and the estimator's uncertainty is assessed with two
finite-population bootstraps (symmetric and doubled-half).
"""
from .bootstrap import (
    DOUBLED_HALF,
    METHODS,
    SYMMETRIC,
    ReplicateWeights,
    SymmetricCounts,
    bootstrap_sd,
    doubled_half_replicate,
    symmetric_counts,
    symmetric_replicate,
)
from .coalitions import CoalitionMask, KernelWeightTable, enumerate_coalitions, kernel_weight
from .data import ContributionOracle, Dataset, contribution, fit_linear, generate_synthetic, load_csv
from .exceptions import (
    CapacityError,
    ConstructionError,
    EstimationFailedError,
    ShapworError,
    SingularSystemError,
    UnsupportedOracleError,
)
from .sampling import (
    CoalitionSample,
    PairingStructure,
    SamplingPlan,
    build_pairing,
    draw_sample,
    draw_with_replacement_baseline,
    plan_sample,
)
from .study import StudyConfig, StudyReport, emit_report, explain, run_study
from .wallenius import Allocation, UrnSpec, allocate_integer, exact_mean, wallenius_mean, wallenius_pmf
from .wls import (
    ShapleyExplanation,
    WlsSystem,
    build_system,
    closed_form_linear_shapley,
    exact_shapley,
    solve_shapley,
)

__version__ = "0.1.0"
