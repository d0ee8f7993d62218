"""Meta-analysis of diagnostic test accuracy with exact binomial
within-study likelihoods, SROC/SAUC summaries, and sensitivity analysis
for publication bias driven by study-level t-statistics.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .data import Study2x2, load_cd64, load_studies, parse_studies_csv
from .errors import (
    ConstraintInfeasibleError,
    ConvergenceFailureError,
    DtametaError,
    NumericFailureError,
    ParseError,
    SingularInformationError,
    SizeCapError,
)
from .estimator import (
    FitResult,
    SensitivityRow,
    SensitivityTable,
    adjusted_log_likelihood,
    fit_adjusted,
    fit_unadjusted,
    selection_probabilities,
    sensitivity_analysis,
    solve_gamma0,
)
from .links import LOGISTIC, PROBIT, get_link
from .model import ModelParams, marginal_log_likelihood_unadjusted
from .quadrature import QuadratureRule, gauss_hermite
from .report import emit_report, fit_report, sensitivity_report, simulation_report
from .selection import (
    SelectionSpec,
    marginal_select_prob_approx,
    marginal_select_prob_exact,
    selection_prob,
    t_statistic,
)
from .simulation import (
    SimScenario,
    experiment_scenario,
    run_simulation_study,
    sparsity_replication,
    sparsity_summary,
)
from .sroc import SrocSummary, sauc, sroc_curve

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "Study2x2",
    "load_cd64",
    "load_studies",
    "parse_studies_csv",
    "DtametaError",
    "ParseError",
    "NumericFailureError",
    "ConvergenceFailureError",
    "ConstraintInfeasibleError",
    "SingularInformationError",
    "SizeCapError",
    "FitResult",
    "SensitivityRow",
    "SensitivityTable",
    "adjusted_log_likelihood",
    "fit_adjusted",
    "fit_unadjusted",
    "sensitivity_analysis",
    "selection_probabilities",
    "solve_gamma0",
    "LOGISTIC",
    "PROBIT",
    "get_link",
    "ModelParams",
    "marginal_log_likelihood_unadjusted",
    "QuadratureRule",
    "gauss_hermite",
    "emit_report",
    "fit_report",
    "sensitivity_report",
    "simulation_report",
    "SelectionSpec",
    "marginal_select_prob_approx",
    "marginal_select_prob_exact",
    "selection_prob",
    "t_statistic",
    "SimScenario",
    "experiment_scenario",
    "run_simulation_study",
    "sparsity_replication",
    "sparsity_summary",
    "SrocSummary",
    "sauc",
    "sroc_curve",
    "__version__",
]
