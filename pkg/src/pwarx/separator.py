"""Multi-category linear discrimination for the PWA separator.

Given labeled extended regressors, find ``theta_x`` (one row per mode) that
minimizes the squared-hinge violations of the polyhedral inequalities plus a
Tikhonov term ``lam * sum_k ||theta_x[k]||^2``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.exceptions import ConvergenceWarning

from .exceptions import DimensionMismatch
from .prox import SolverSettings


@dataclass(frozen=True)
class SeparatorProblem:
    Xt: np.ndarray
    labels: np.ndarray
    K: int
    lam: float

    def __post_init__(self):
        Xt = np.atleast_2d(np.asarray(self.Xt, dtype=float))
        labels = np.asarray(self.labels, dtype=np.intp).ravel()
        if Xt.shape[0] != labels.size:
            raise DimensionMismatch(
                f"{Xt.shape[0]} regressors but {labels.size} labels"
            )
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.K):
            raise ValueError(f"labels must lie in 0..{self.K - 1}")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        object.__setattr__(self, "Xt", Xt)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.Xt.shape[1]


def _margins(theta_x, Xt, labels):
    """``M[t, j] = (theta_j - theta_{s_t})' x_t + 1`` with the own column zeroed."""
    S = Xt @ theta_x.T
    rows = np.arange(Xt.shape[0])
    M = S - S[rows, labels][:, None] + 1.0
    M[rows, labels] = 0.0
    return M


def hinge_loss(theta_x, Xt, labels):
    """Unregularized violation loss, one value per sample."""
    P = np.maximum(_margins(np.atleast_2d(theta_x), Xt, labels), 0.0)
    return np.sum(P * P, axis=1)


def separator_objective(theta_x, p: SeparatorProblem):
    """Value and exact gradient of the regularized squared-hinge loss.

    Returns
    -------
    value : float
    gradient : ndarray of shape (K, dim)
    """
    theta_x = np.asarray(theta_x, dtype=float)
    if theta_x.shape != (p.K, p.dim):
        raise DimensionMismatch(
            f"theta_x has shape {theta_x.shape}, expected {(p.K, p.dim)}"
        )
    P = np.maximum(_margins(theta_x, p.Xt, p.labels), 0.0)
    value = float(np.sum(P * P) + p.lam * np.sum(theta_x * theta_x))
    W = 2.0 * P
    rows = np.arange(p.Xt.shape[0])
    W[rows, p.labels] = -W.sum(axis=1)
    grad = W.T @ p.Xt + 2.0 * p.lam * theta_x
    return value, grad


def _hessian(theta_x, p, outer):
    # generalized Hessian; the squared hinge is piecewise quadratic
    K, d = p.K, p.dim
    T = p.Xt.shape[0]
    rows = np.arange(T)
    active = (_margins(theta_x, p.Xt, p.labels) > 0.0).astype(float)
    C = np.zeros((T, K, K))
    C[:, np.arange(K), np.arange(K)] = active
    C[rows, p.labels, :] -= active
    C[rows, :, p.labels] -= active
    C[rows, p.labels, p.labels] = active.sum(axis=1)
    H = 2.0 * (C.reshape(T, K * K).T @ outer)
    H = H.reshape(K, K, d, d).transpose(0, 2, 1, 3).reshape(K * d, K * d)
    H[np.diag_indices_from(H)] += 2.0 * p.lam
    return H


def fit_separator(p: SeparatorProblem, s: SolverSettings = SolverSettings(), theta0=None):
    """Minimize the separator objective from the zero initial point.

    Damped generalized-Newton steps with Armijo backtracking; the objective
    is strictly convex, so the minimizer is unique and independent of the
    start. Stops when the relative objective decrease falls below ``s.tol``.

    Returns
    -------
    theta_x : ndarray of shape (K, dim)
    """
    K, d = p.K, p.dim
    if K == 1:
        return np.zeros((1, d))
    theta = np.zeros((K, d)) if theta0 is None else np.array(theta0, dtype=float)
    f, g = separator_objective(theta, p)
    outer = (p.Xt[:, :, None] * p.Xt[:, None, :]).reshape(p.Xt.shape[0], d * d)
    for _ in range(int(s.max_iters)):
        gv = g.ravel()
        try:
            direction = -np.linalg.solve(_hessian(theta, p, outer), gv)
        except np.linalg.LinAlgError:
            direction = -gv
        slope = gv @ direction
        if slope >= 0:
            direction, slope = -gv, -(gv @ gv)
        if slope == 0:
            return theta
        direction = direction.reshape(K, d)
        step = 1.0
        while True:
            cand = theta + step * direction
            f_new, g_new = separator_objective(cand, p)
            if f_new <= f + 1e-4 * step * slope or step < 1e-12:
                break
            step *= 0.5
        if f_new > f:
            return theta
        dec = f - f_new
        theta, f, g = cand, f_new, g_new
        if dec <= s.tol * abs(f):
            return theta
    warnings.warn(
        f"fit_separator did not converge within {s.max_iters} iterations",
        ConvergenceWarning,
        stacklevel=2,
    )
    return theta
