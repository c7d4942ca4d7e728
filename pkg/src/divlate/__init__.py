"""Distributional IV treatment-effect curves via cross-fitted orthogonal scores.

Estimates, at each outcome level y, the contrast between complier potential
outcome CDFs using a Wald-type ratio of Neyman-orthogonal scores with K-fold
cross-fitted nuisances. Ships two from-scratch nuisance backends (a B-spline
Kolmogorov-Arnold network and a random forest), synthetic data generators with
latent-truth oracles, and a replicated-simulation harness.
"""

__version__ = "0.1.0"

from . import errors
from .data import (
    Dataset,
    FoldAssignment,
    YGrid,
    build_ygrid,
    default_schema,
    kfold_split,
    load_csv,
    save_csv,
)
from .dgp import (
    dgp2_mu,
    dgp2_outcome_cdf,
    dgp2_p,
    dgp2_pi,
    gen_dgp1,
    gen_dgp2,
    true_divlate,
)
from .estimator import (
    CrossFitPredictions,
    DivLateCurve,
    ScoreTable,
    compute_scores,
    cross_fit,
    estimate,
    instrument_weight,
    score_alpha,
    score_beta,
    solve_curve,
    wald_estimate,
    write_curve_csv,
)
from .forest import (
    ForestConfig,
    ForestModel,
    Tree,
    forest_fit,
    forest_predict_proba,
    forest_predict_raw,
    tree_fit,
)
from .kan import (
    AdamState,
    KanConfig,
    KanLayer,
    KanModel,
    SplineGrid,
    adamw_step,
    bspline_basis,
    kan_fit,
    kan_forward,
    kan_predict_proba,
    kan_reg_loss,
    model_from_json,
    model_to_json,
)
from .kernels import kernel_backend
from .montecarlo import (
    McConfig,
    McResult,
    rep_data_seed,
    rep_estimate_seed,
    run_montecarlo,
    summarize,
    write_results_csv,
)
from .nuisance import FixedBackend, FoldNuisanceFit, ForestBackend, KanBackend, fit_fold

__all__ = [
    "__version__",
    "errors",
    "Dataset",
    "FoldAssignment",
    "YGrid",
    "build_ygrid",
    "default_schema",
    "kfold_split",
    "load_csv",
    "save_csv",
    "dgp2_mu",
    "dgp2_outcome_cdf",
    "dgp2_p",
    "dgp2_pi",
    "gen_dgp1",
    "gen_dgp2",
    "true_divlate",
    "CrossFitPredictions",
    "DivLateCurve",
    "ScoreTable",
    "compute_scores",
    "cross_fit",
    "estimate",
    "instrument_weight",
    "score_alpha",
    "score_beta",
    "solve_curve",
    "wald_estimate",
    "write_curve_csv",
    "ForestConfig",
    "ForestModel",
    "Tree",
    "forest_fit",
    "forest_predict_proba",
    "forest_predict_raw",
    "tree_fit",
    "AdamState",
    "KanConfig",
    "KanLayer",
    "KanModel",
    "SplineGrid",
    "adamw_step",
    "bspline_basis",
    "kan_fit",
    "kan_forward",
    "kan_predict_proba",
    "kan_reg_loss",
    "model_from_json",
    "model_to_json",
    "kernel_backend",
    "McConfig",
    "McResult",
    "rep_data_seed",
    "rep_estimate_seed",
    "run_montecarlo",
    "summarize",
    "write_results_csv",
    "FixedBackend",
    "FoldNuisanceFit",
    "ForestBackend",
    "KanBackend",
    "fit_fold",
]
