"""Identification of piecewise-affine ARX models.

Coordinate-descent fitting of the local models, the max-of-affine partition
and the mode sequence, plus regularization-driven selection of the number of
modes and of the model orders.
"""
from .benchmark import generate_example, run_montecarlo
from .core import (
    Dataset,
    FitResult,
    PwarxModel,
    RegressorSet,
    add_affine,
    bfr,
    build_regressors,
    infer_mode,
    infer_modes,
    predict,
    predict_one_step,
    simulate_open_loop,
    snr_db,
)
from .descent import (
    HyperParams,
    LocalRegularizer,
    assign_modes,
    fit_local_models,
    fit_pwarx,
    multi_start_fit,
    pwarx_objective,
)
from .estimators import PWARegressor, PWARXIdentifier
from .exceptions import PwarxError
from .prox import (
    RegressionProblem,
    SolverSettings,
    project_l1_ball,
    prox_linf,
    soft_threshold,
    solve_elastic_net,
    solve_ridge,
    solve_ridge_linf,
)
from .selection import (
    count_active_orders,
    detect_empty_clusters,
    detect_redundant,
    select_num_modes,
    select_order,
)
from .separator import SeparatorProblem, fit_separator, separator_objective

__version__ = "0.1.0"
