"""Bias-adjusted U-statistic classifier for high-dimensional data."""

__version__ = "0.1.0"

from .data import (
    LabeledDataset,
    ValidationError,
    load_labeled_csv,
    load_unlabeled_csv,
    save_labeled_csv,
)
from .ustat import (
    GramBundle,
    InsufficientSamplesError,
    build_gram,
    u_one_sample,
    u_two_sample,
)
from .estimators import MomentEstimates, e0, e_cross, e_sq, estimate_moments
from .classifier import UClassifier, distance_form_score
from .error_rates import (
    ErrorReport,
    NumericalError,
    TheoreticalMoments,
    conditional_error,
    elliptical_cdf,
    elliptical_density,
    estimated_error,
    fisher_error,
    ideal_error,
    kantorovich_bound,
    normal_radial,
    student_t_radial,
    theoretical_error,
    theoretical_moments,
)
from .simulate import (
    CovarianceModel,
    ExperimentConfig,
    ExperimentResult,
    PopulationSpec,
    PopulationTemplate,
    build_ar1,
    build_explicit,
    build_mean_pattern,
    build_unstructured,
    config_from_dict,
    histogram_fd,
    ks_statistic,
    run_error_curve_experiment,
    run_normality_experiment,
    sample,
    sig10,
    stream,
)
from .cv import CvReport, FoldAssignment, aggregate, kfold_split, run_cv

__all__ = [
    "CovarianceModel",
    "CvReport",
    "ErrorReport",
    "ExperimentConfig",
    "ExperimentResult",
    "FoldAssignment",
    "GramBundle",
    "InsufficientSamplesError",
    "LabeledDataset",
    "MomentEstimates",
    "NumericalError",
    "PopulationSpec",
    "PopulationTemplate",
    "TheoreticalMoments",
    "UClassifier",
    "ValidationError",
    "aggregate",
    "build_ar1",
    "build_explicit",
    "build_gram",
    "build_mean_pattern",
    "build_unstructured",
    "conditional_error",
    "config_from_dict",
    "distance_form_score",
    "e0",
    "e_cross",
    "e_sq",
    "elliptical_cdf",
    "elliptical_density",
    "estimate_moments",
    "estimated_error",
    "fisher_error",
    "histogram_fd",
    "ideal_error",
    "kantorovich_bound",
    "kfold_split",
    "ks_statistic",
    "load_labeled_csv",
    "load_unlabeled_csv",
    "normal_radial",
    "run_cv",
    "run_error_curve_experiment",
    "run_normality_experiment",
    "sample",
    "save_labeled_csv",
    "sig10",
    "stream",
    "student_t_radial",
    "theoretical_error",
    "theoretical_moments",
    "u_one_sample",
    "u_two_sample",
    "__version__",
]
