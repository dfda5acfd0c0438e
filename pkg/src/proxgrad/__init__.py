"""Composite convex optimization toolkit.

Linesearch-free adaptive proximal gradient plus universal-gradient and
auto-conditioned baselines, with exact operator-call accounting, certified
synthetic instances, LibSVM ingestion, analysis diagnostics, and a CSV
benchmark harness.
"""

from .linop import CountedOperator, CsrMatrix, dense_to_csr
from .objectives import (
    BallRegularizer,
    CompositeProblem,
    L1Regularizer,
    LogisticLoss,
    MixtureLoss,
    PNormResidualLoss,
    PowerHingeLoss,
    SmoothLoss,
    ZeroRegularizer,
)
from .solvers import (
    ACFGMConfig,
    AdaPGConfig,
    DEFAULT_ACFGM_BETA,
    NUPGConfig,
    SolverTrace,
    StoppingRule,
    TraceRecord,
    acfgm_initial_stepsize,
    acfgm_run,
    acfgm_sequence_step,
    adapg_run,
    adapg_stepsize,
    fnupg_run,
    nupg_run,
    tune_initial_stepsize,
)
from .diagnostics import (
    HolderEstimates,
    LyapunovSeries,
    best_so_far,
    estimates,
    fne_chain,
    lyapunov_series,
    min_gap_bound,
    min_gap_bound_series,
    rate_envelope,
    residual_ratio_bound,
    stepsize_ratio_cap,
)
from .data import (
    GeneratedInstance,
    LabeledDataset,
    generate_mixture,
    generate_pnorm_lasso,
    lasso_problem,
    load_libsvm,
    parse_libsvm,
    to_libsvm,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    config_from_json,
    preset,
    preset_names,
    run_experiment,
    run_solver,
)

__version__ = "0.1.0"
