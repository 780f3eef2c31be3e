"""scikit-learn style estimators on top of the functional API.

:class:`PWARegressor` fits a piecewise-affine map to a given feature matrix.
:class:`PWARXIdentifier` works on raw input/output series, builds the lagged
regressors itself and can select the number of modes or the orders.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted, check_X_y

from .core import (
    Dataset,
    PwarxModel,
    RegressorSet,
    bfr,
    build_regressors,
    infer_modes,
    predict,
    simulate_open_loop,
)
from .descent import HyperParams, LocalRegularizer, multi_start_fit
from .prox import SolverSettings
from .selection import select_num_modes, select_order


def _hyper(est, kind, K_max=10, n_a_max=10, n_b_max=10):
    nu = 1.0 - est.mu if est.nu is None else est.nu
    if kind == "ridge":
        nu = 0.0
    seed = 0 if est.random_state is None else int(est.random_state)
    return HyperParams(
        rho=est.rho,
        lam=est.lam,
        reg=LocalRegularizer(kind, est.mu, nu),
        delta=getattr(est, "delta", 0.01),
        K_max=K_max,
        n_a_max=n_a_max,
        n_b_max=n_b_max,
        restarts=est.restarts,
        max_outer=est.max_outer,
        solver=SolverSettings(tol=est.tol, max_iters=est.max_iter),
        seed=seed,
    )


def _store(est, result):
    est.model_ = result.model
    est.modes_ = np.asarray(result.modes)
    est.objective_ = result.objective
    est.converged_ = result.converged
    est.n_iter_ = result.outer_iterations
    est.theta_y_ = np.array(result.model.theta_y)
    est.theta_x_ = np.array(result.model.theta_x)


class PWARegressor(RegressorMixin, BaseEstimator):
    """Piecewise-affine regression with a max-of-affine partition.

    Each row of ``X`` is treated as one regressor; a trailing affine term is
    added internally. Fitting runs the multi-start coordinate descent with
    ``n_modes`` modes and a ridge penalty on the local models.

    Parameters
    ----------
    n_modes : int, default=3
    rho : float, default=1.0
        Weight of the partition term in the mode assignment.
    lam : float, default=1e-3
        Tikhonov weight of the separator.
    mu : float, default=0.1
        Ridge weight of the local models.
    nu : float or None, default=None
        Unused by the plain ridge fit; kept for parameter symmetry.
    restarts : int, default=20
    max_outer : int, default=50
    tol : float, default=1e-9
    max_iter : int, default=20000
    random_state : int or None, default=None
        Seed of the initial mode sequences; ``None`` means 0.

    Attributes
    ----------
    model_ : PwarxModel
    modes_ : ndarray of shape (n_samples,)
        Training labels, 0-based.
    theta_y_, theta_x_ : ndarray of shape (n_modes, n_features + 1)
    objective_ : float
    converged_ : bool
    n_features_in_ : int
    """

    def __init__(self, n_modes=3, rho=1.0, lam=1e-3, mu=0.1, nu=None, restarts=20,
                 max_outer=50, tol=1e-9, max_iter=20000, random_state=None):
        self.n_modes = n_modes
        self.rho = rho
        self.lam = lam
        self.mu = mu
        self.nu = nu
        self.restarts = restarts
        self.max_outer = max_outer
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        # a static map is an exogenous-only model with n_b = n_features
        reg_set = RegressorSet(X=X, targets=y, n_a=0, n_b=X.shape[1], offset=0)
        _store(self, multi_start_fit(reg_set, int(self.n_modes), _hyper(self, "ridge")))
        return self

    def _check(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but the estimator was fitted with {self.n_features_in_}"
            )
        return X

    def predict(self, X):
        X = self._check(X)
        return predict(self.model_, X)

    def predict_mode(self, X):
        """Active mode of each row (0-based), from the fitted partition."""
        X = self._check(X)
        return infer_modes(self.model_, X)


class PWARXIdentifier(BaseEstimator):
    """PWARX identification from an input series ``u`` and output series ``y``.

    Parameters
    ----------
    n_a, n_b : int, default=1
        Output and input orders, used unless ``structure="select_order"``.
    n_modes : int, default=3
        Number of modes, used unless ``structure="select_modes"``.
    structure : {"fixed", "select_modes", "select_order"}, default="fixed"
        ``"select_modes"`` shrinks the number of modes from ``K_max`` with the
        infinity-norm penalty; ``"select_order"`` shrinks the orders from
        ``n_a_max``/``n_b_max`` with the elastic net. Both end with a refit
        without the shrinkage term.
    K_max, n_a_max, n_b_max : int, default=10
    delta : float, default=0.01
        Pruning threshold.
    rho, lam, mu : float
        See :class:`PWARegressor`.
    nu : float or None, default=None
        Shrinkage weight; ``None`` means ``1 - mu``.
    restarts, max_outer, tol, max_iter, random_state
        See :class:`PWARegressor`.

    Attributes
    ----------
    model_ : PwarxModel
    n_modes_, n_a_, n_b_ : int
        Structure of the fitted model.
    trace_ : selection trace or None
    """

    def __init__(self, n_a=1, n_b=1, n_modes=3, structure="fixed", K_max=10, n_a_max=10,
                 n_b_max=10, delta=0.01, rho=1.0, lam=1e-3, mu=0.1, nu=None, restarts=20,
                 max_outer=50, tol=1e-9, max_iter=20000, random_state=None):
        self.n_a = n_a
        self.n_b = n_b
        self.n_modes = n_modes
        self.structure = structure
        self.K_max = K_max
        self.n_a_max = n_a_max
        self.n_b_max = n_b_max
        self.delta = delta
        self.rho = rho
        self.lam = lam
        self.mu = mu
        self.nu = nu
        self.restarts = restarts
        self.max_outer = max_outer
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    @staticmethod
    def _series(u, y=None):
        u = check_array(u, ensure_2d=False, dtype=float).ravel()
        if y is None:
            return u
        y = check_array(y, ensure_2d=False, dtype=float).ravel()
        check_consistent_length(u, y)
        return u, y

    def fit(self, u, y):
        u, y = self._series(u, y)
        data = Dataset(u=u, y=y)
        bounds = dict(K_max=self.K_max, n_a_max=self.n_a_max, n_b_max=self.n_b_max)
        self.trace_ = None
        if self.structure == "fixed":
            h = _hyper(self, "ridge", **bounds)
            result = multi_start_fit(build_regressors(data, self.n_a, self.n_b), int(self.n_modes), h)
        elif self.structure == "select_modes":
            h = _hyper(self, "ridge_linf", **bounds)
            _, result, self.trace_ = select_num_modes(data, self.n_a, self.n_b, h)
        elif self.structure == "select_order":
            h = _hyper(self, "elastic_net", **bounds)
            _, _, result, self.trace_ = select_order(data, int(self.n_modes), h)
        else:
            raise ValueError(
                f"structure must be 'fixed', 'select_modes' or 'select_order', got {self.structure!r}"
            )
        _store(self, result)
        self.n_modes_ = result.model.K
        self.n_a_ = result.model.n_a
        self.n_b_ = result.model.n_b
        return self

    def predict(self, u, y):
        """One-step-ahead predictions from measured lags.

        Returns one value per time ``t >= max(n_a_, n_b_)``.
        """
        check_is_fitted(self, "model_")
        u, y = self._series(u, y)
        rs = build_regressors(Dataset(u=u, y=y), self.n_a_, self.n_b_)
        return predict(self.model_, rs.X)

    def simulate(self, u, y_init):
        """Open-loop simulation; see :func:`pwarx.core.simulate_open_loop`."""
        check_is_fitted(self, "model_")
        return simulate_open_loop(self.model_, self._series(u), y_init)

    def score(self, u, y):
        """Best fit rate (percent) of the open-loop simulation against ``y``.

        The first ``max(n_a_, n_b_)`` outputs seed the simulation and are not
        scored.
        """
        check_is_fitted(self, "model_")
        u, y = self._series(u, y)
        t0 = max(self.n_a_, self.n_b_)
        return bfr(y[t0:], simulate_open_loop(self.model_, u, y[:t0]))


__all__ = ["PWARegressor", "PWARXIdentifier", "PwarxModel"]
