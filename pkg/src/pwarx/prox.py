"""Proximal operators and dense solvers for the per-mode regularized regressions.

Every solver minimizes

    ||b - A theta||^2 + mu * ||theta||^2 + nu * penalty(theta)

with no 1/2 factor and no averaging over rows, so the weights are on the
same scale as the ones used by the coordinate-descent objective.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np
from sklearn.exceptions import ConvergenceWarning

from . import _kernels
from .exceptions import DimensionMismatch, SingularSystem

PENALTIES = ("none", "linf", "l1")


@dataclass(frozen=True)
class SolverSettings:
    """Stopping rule shared by the iterative solvers.

    Iteration stops once the relative decrease of the objective between two
    accepted iterates falls below ``tol`` and, for strongly convex problems,
    the certified distance to the minimizer (subgradient residual divided by
    the strong-convexity modulus) is below ``xtol * max(1, ||theta||_inf)``.
    ``max_iters`` caps the iteration count.
    """

    tol: float = 1e-9
    max_iters: int = 20000
    xtol: float = 1e-10

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not self.xtol > 0:
            raise ValueError(f"xtol must be positive, got {self.xtol}")
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class RegressionProblem:
    A: np.ndarray
    b: np.ndarray
    mu: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape[0] != b.size:
            # a (0,) target with a (1, d) promoted matrix means "no rows"
            if b.size == 0 and np.asarray(self.A).size == 0:
                A = A.reshape(0, max(A.shape[1], 1))
            else:
                raise DimensionMismatch(
                    f"A has {A.shape[0]} rows but b has {b.size} entries"
                )
        if A.shape[1] < 1:
            raise DimensionMismatch("A must have at least one column")
        if self.mu < 0 or self.nu < 0:
            raise ValueError("mu and nu must be non-negative")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n_features(self) -> int:
        return self.A.shape[1]

    @cached_property
    def gram(self):
        return self.A.T @ self.A, self.A.T @ self.b, float(self.b @ self.b)

    def objective(self, theta, penalty="none"):
        theta = np.asarray(theta, dtype=float)
        r = self.b - self.A @ theta
        return float(r @ r + self.mu * (theta @ theta) + self.nu * _penalty(theta, penalty))


class SolverInfo(NamedTuple):
    objective: float
    n_iter: int
    converged: bool
    history: list = []


def _penalty(theta, kind):
    if kind == "none":
        return 0.0
    if kind == "linf":
        return float(np.max(np.abs(theta))) if theta.size else 0.0
    if kind == "l1":
        return float(np.sum(np.abs(theta)))
    raise ValueError(f"unknown penalty {kind!r}, expected one of {PENALTIES}")


def soft_threshold(v, tau):
    """``sign(v) * max(|v| - tau, 0)``, elementwise."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    out = np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def project_l1_ball(v, r):
    """Euclidean projection of ``v`` onto ``{w : ||w||_1 <= r}``.

    Uses the sort-based exact method, O(n log n).
    """
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= r:
        return v.copy()
    s = np.sort(a)[::-1]
    css = np.cumsum(s)
    k = np.arange(1, s.size + 1)
    # largest k with s_k > (css_k - r) / k; written so that k = 1 always
    # qualifies, even when r is below the rounding unit of s_1
    idx = np.nonzero((s * k - css) + r > 0)[0][-1]
    shift = (css[idx] - r) / (idx + 1.0)
    return np.sign(v) * np.maximum(a - shift, 0.0)


def prox_linf(v, tau):
    """Proximal map of ``tau * ||.||_inf`` via the Moreau decomposition."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    v = np.asarray(v, dtype=float)
    if tau == 0:
        return v.copy()
    if np.abs(v).sum() <= tau:
        return np.zeros_like(v)
    return v - project_l1_ball(v, tau)


def _modulus(H):
    # strong-convexity modulus of theta' H theta; zero when H is singular
    ev = np.linalg.eigvalsh(H)
    return 2.0 * ev[0] if ev[0] > 1e-12 * max(ev[-1], 1.0) else 0.0, ev[-1]


def _warn_max_iters(name, n_iter):
    warnings.warn(
        f"{name} did not converge within {n_iter} iterations; returning best iterate",
        ConvergenceWarning,
        stacklevel=3,
    )


def _initial(theta0, d):
    if theta0 is None:
        return np.zeros(d)
    theta0 = np.asarray(theta0, dtype=float).ravel()
    if theta0.size != d:
        raise DimensionMismatch(f"theta0 has {theta0.size} entries, expected {d}")
    return theta0.copy()


def solve_ridge(p: RegressionProblem, return_info=False):
    """Closed-form minimizer of ``||b - A theta||^2 + mu ||theta||^2``."""
    d = p.n_features
    if p.A.shape[0] == 0:
        theta = np.zeros(d)
    else:
        G, c, _ = p.gram
        if p.mu == 0 and np.linalg.matrix_rank(p.A) < d:
            raise SingularSystem("A'A is singular and mu = 0")
        theta = np.linalg.solve(G + p.mu * np.eye(d), c)
    if return_info:
        f = p.objective(theta)
        return theta, SolverInfo(f, 1, True, [f])
    return theta


def solve_ridge_linf(
    p: RegressionProblem,
    s: SolverSettings = SolverSettings(),
    theta0: Optional[np.ndarray] = None,
    return_info=False,
):
    """Ridge regression with an infinity-norm penalty on the whole vector.

    Accelerated proximal gradient with constant step ``1/L`` where
    ``L = 2 * lambda_max(A'A) + 2 * mu``. Momentum is reset whenever a step
    would increase the objective, so accepted iterates are monotone.
    """
    d = p.n_features
    if p.A.shape[0] == 0:
        return _empty(d, p, "linf", return_info)
    G, c, bb = p.gram
    H = G + p.mu * np.eye(d)
    modulus, top = _modulus(H)
    L = 2.0 * top
    if L <= 0:
        return _empty(d, p, "linf", return_info)
    x0 = _initial(theta0, d)
    f0 = _kernels.quad(H, c, bb, x0) + p.nu * np.max(np.abs(x0))
    # objective values closer than this are indistinguishable in the Gram form
    slack = 64.0 * np.finfo(float).eps * (bb + abs(f0))
    x, f, n_iter, converged, history = _kernels.fista_linf(
        H, c, bb, float(p.nu), L, modulus, x0, s.tol, s.xtol, int(s.max_iters), slack
    )
    return _finish("solve_ridge_linf", x, f, n_iter, converged, history, s, return_info)


def solve_elastic_net(
    p: RegressionProblem,
    s: SolverSettings = SolverSettings(),
    theta0: Optional[np.ndarray] = None,
    return_info=False,
):
    """Elastic net by cyclic coordinate descent with exact soft-threshold updates."""
    d = p.n_features
    if p.A.shape[0] == 0:
        return _empty(d, p, "l1", return_info)
    G, c, bb = p.gram
    H = G + p.mu * np.eye(d)
    modulus, _ = _modulus(H)
    x, f, n_iter, converged, history = _kernels.cd_elastic_net(
        H, c, bb, float(p.nu), modulus, _initial(theta0, d), s.tol, s.xtol,
        int(s.max_iters),
    )
    return _finish("solve_elastic_net", x, f, n_iter, converged, history, s, return_info)


def _finish(name, x, f, n_iter, converged, history, s, return_info):
    if not converged:
        _warn_max_iters(name, s.max_iters)
    if return_info:
        return x, SolverInfo(float(f), int(n_iter), bool(converged), history.tolist())
    return x


def _empty(d, p, penalty, return_info):
    theta = np.zeros(d)
    if return_info:
        f = p.objective(theta, penalty)
        return theta, SolverInfo(f, 0, True, [f])
    return theta
