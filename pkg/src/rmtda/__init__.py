"""Regularized LDA/QDA: classifiers, large-dimensional error equivalents and error estimators."""

from .baselines import BaselineConfig, BaselineMethod, bootstrap_error, cv_error, plugin_error
from .classifiers import (
    clt_error_rqda,
    discriminant_scores,
    empirical_error,
    exact_error_rlda,
    predict,
    qda_error_components,
    score_rlda,
    score_rqda,
)
from .equivalents import (
    check_growth_assumptions,
    lda_common_cov_error,
    lda_deterministic_error,
    qda_deterministic_error,
    rqda_equal_cov_error,
    solve_lda_fixed_point,
    solve_qda_delta,
)
from .errors import *  # noqa: F401,F403
from .estimators import g_estimate, g_estimate_rlda, g_estimate_rqda
from .harness import ExperimentConfig, SyntheticGeometry, build_synthetic, load_config
from .model import (
    Classifier,
    ErrorReport,
    FittedDA,
    GaussianClassSpec,
    ProblemInstance,
    TrainingSet,
    fit_statistics,
    make_rng,
    sample_training,
)
from .tuning import minimize_gamma, stage_two_interval, two_stage_optimize

__version__ = "0.1.0"
