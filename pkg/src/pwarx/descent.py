"""Coordinate-descent fitting of PWARX models and its multi-start wrapper.

One outer iteration estimates the local models for the current mode
sequence, then the separator, then re-assigns every sample to the mode with
the smallest combined fitting/separator cost, until the sequence stops
changing.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .core import FitResult, PwarxModel, RegressorSet
from .exceptions import DimensionMismatch
from .prox import (
    RegressionProblem,
    SolverSettings,
    _penalty,
    solve_elastic_net,
    solve_ridge,
    solve_ridge_linf,
)
from .separator import SeparatorProblem, fit_separator, hinge_loss

logger = logging.getLogger(__name__)

REGULARIZERS = {
    "ridge": "none",
    "ridge_linf": "linf",
    "elastic_net": "l1",
}


@dataclass(frozen=True)
class LocalRegularizer:
    """Penalty on each local parameter vector: ``mu ||.||_2^2 + nu * penalty``.

    ``kind`` is ``"ridge"`` (no shrinkage term), ``"ridge_linf"`` (whole-vector
    shrinkage through the infinity norm) or ``"elastic_net"`` (componentwise
    shrinkage through the l1 norm).
    """

    kind: str = "ridge_linf"
    mu: float = 0.1
    nu: float = 0.9

    def __post_init__(self):
        if self.kind not in REGULARIZERS:
            raise ValueError(
                f"unknown regularizer {self.kind!r}, expected one of {sorted(REGULARIZERS)}"
            )
        if self.mu < 0 or self.nu < 0:
            raise ValueError("mu and nu must be non-negative")

    @property
    def penalty(self) -> str:
        return REGULARIZERS[self.kind]

    def value(self, theta_y) -> float:
        theta_y = np.atleast_2d(theta_y)
        return float(
            self.mu * np.sum(theta_y * theta_y)
            + self.nu * sum(_penalty(th, self.penalty) for th in theta_y)
        )

    def without_shrinkage(self) -> "LocalRegularizer":
        return LocalRegularizer("ridge", self.mu, 0.0)


@dataclass(frozen=True)
class HyperParams:
    rho: float = 1.0
    lam: float = 1e-3
    reg: LocalRegularizer = field(default_factory=LocalRegularizer)
    delta: float = 0.01
    K_max: int = 10
    n_a_max: int = 10
    n_b_max: int = 10
    restarts: int = 20
    max_outer: int = 50
    solver: SolverSettings = field(default_factory=SolverSettings)
    seed: int = 0

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if self.K_max < 1 or self.n_a_max < 0 or self.n_b_max < 0:
            raise ValueError("structure bounds must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def with_reg(self, kind=None, mu=None, nu=None) -> "HyperParams":
        r = self.reg
        return replace(
            self,
            reg=LocalRegularizer(
                r.kind if kind is None else kind,
                r.mu if mu is None else mu,
                r.nu if nu is None else nu,
            ),
        )


def derive_seed(seed, *keys) -> int:
    """Deterministic 64-bit child seed for ``(seed, *keys)``."""
    ss = np.random.SeedSequence([int(seed), *map(int, keys)])
    return int(ss.generate_state(1, np.uint64)[0])


def initial_mode_sequences(n, T, K, seed):
    """``n`` i.i.d. uniform label sequences from a PCG64 stream seeded with ``seed``."""
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    return [rng.integers(0, K, size=T) for _ in range(n)]


def _check_labels(modes, T, K):
    modes = np.asarray(modes, dtype=np.intp).ravel()
    if modes.size != T:
        raise DimensionMismatch(f"mode sequence has {modes.size} labels, expected {T}")
    if modes.size and (modes.min() < 0 or modes.max() >= K):
        raise ValueError(f"mode labels must lie in 0..{K - 1}")
    return modes


def fit_local_models(
    reg_set: RegressorSet,
    modes,
    K: int,
    reg: LocalRegularizer,
    solver: SolverSettings = SolverSettings(),
    theta0=None,
):
    """Fit each local model on the samples currently assigned to it.

    Modes without samples get the zero vector. ``theta0`` optionally warm
    starts the iterative solvers.
    """
    modes = _check_labels(modes, reg_set.T_eff, K)
    Xt = reg_set.Xt
    y = reg_set.targets
    theta_y = np.zeros((K, Xt.shape[1]))
    for k in range(K):
        mask = modes == k
        if not mask.any():
            continue
        p = RegressionProblem(Xt[mask], y[mask], reg.mu, reg.nu)
        start = None if theta0 is None else theta0[k]
        if reg.kind == "ridge":
            theta_y[k] = solve_ridge(p)
        elif reg.kind == "ridge_linf":
            theta_y[k] = solve_ridge_linf(p, solver, theta0=start)
        else:
            theta_y[k] = solve_elastic_net(p, solver, theta0=start)
    return theta_y


def mode_costs(reg_set: RegressorSet, theta_y, theta_x, rho: float):
    """Cost of assigning each sample to each mode, shape ``(T_eff, K)``."""
    theta_y = np.atleast_2d(theta_y)
    theta_x = np.atleast_2d(theta_x)
    Xt = reg_set.Xt
    if theta_y.shape[1] != Xt.shape[1] or theta_x.shape != theta_y.shape:
        raise DimensionMismatch("parameter dimensions do not match the regressors")
    resid = reg_set.targets[:, None] - Xt @ theta_y.T
    S = Xt @ theta_x.T
    # D[t, k, j] = (theta_j - theta_k)' x_t + 1
    D = S[:, None, :] - S[:, :, None] + 1.0
    np.maximum(D, 0.0, out=D)
    K = theta_y.shape[0]
    D[:, np.arange(K), np.arange(K)] = 0.0
    return resid * resid + rho * np.einsum("tkj,tkj->tk", D, D)


def assign_modes(reg_set: RegressorSet, theta_y, theta_x, rho: float):
    """Per-sample argmin of the mode costs; ties go to the smallest index."""
    return np.argmin(mode_costs(reg_set, theta_y, theta_x, rho), axis=1)


def pwarx_objective(reg_set: RegressorSet, theta_y, theta_x, modes, rho, lam, reg):
    """Full cost: fit + rho * (separator loss + lam ||theta_x||^2) + local regularizer."""
    theta_y = np.atleast_2d(theta_y)
    theta_x = np.atleast_2d(theta_x)
    modes = _check_labels(modes, reg_set.T_eff, theta_y.shape[0])
    Xt = reg_set.Xt
    r = reg_set.targets - np.einsum("ij,ij->i", Xt, theta_y[modes])
    sep = hinge_loss(theta_x, Xt, modes).sum() + lam * np.sum(theta_x * theta_x)
    return float(r @ r + rho * sep + reg.value(theta_y))


def fit_pwarx(reg_set: RegressorSet, K: int, s0, h: HyperParams) -> FitResult:
    """Alternate local-model, separator and mode-sequence updates.

    Stops when the mode sequence is unchanged by an outer iteration
    (``converged=True``) or after ``h.max_outer`` iterations, in which case
    the lowest-cost iterate is returned with ``converged=False``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    s = _check_labels(s0, reg_set.T_eff, K)
    Xt = reg_set.Xt
    reg = h.reg

    def cost(ty, tx, labels):
        return pwarx_objective(reg_set, ty, tx, labels, h.rho, h.lam, reg)

    history = []
    theta_y = theta_x = None
    best = None
    converged = False
    it = 0
    for it in range(1, h.max_outer + 1):
        theta_y = fit_local_models(reg_set, s, K, reg, h.solver, theta0=theta_y)
        if theta_x is not None:
            history.append(cost(theta_y, theta_x, s))
        theta_x = fit_separator(SeparatorProblem(Xt, s, K, h.lam), h.solver, theta0=theta_x)
        history.append(cost(theta_y, theta_x, s))
        s_new = assign_modes(reg_set, theta_y, theta_x, h.rho)
        obj = cost(theta_y, theta_x, s_new)
        history.append(obj)
        if best is None or obj < best[0]:
            best = (obj, theta_y, theta_x, s_new)
        if np.array_equal(s_new, s):
            converged = True
            break
        s = s_new
    if converged:
        ty, tx, labels = theta_y, theta_x, s_new
    else:
        logger.info("fit_pwarx: mode sequence still changing after %d iterations", it)
        obj, ty, tx, labels = best
    model = PwarxModel(reg_set.n_a, reg_set.n_b, ty, tx)
    return FitResult(model, labels, obj, it, converged, tuple(history))


def multi_start_fit(reg_set: RegressorSet, K: int, h: HyperParams) -> FitResult:
    """Run ``fit_pwarx`` from ``h.restarts`` random mode sequences, keep the cheapest.

    Ties on the objective keep the earliest restart.
    """
    starts = initial_mode_sequences(h.restarts, reg_set.T_eff, K, h.seed)
    best = None
    for r, s0 in enumerate(starts):
        res = fit_pwarx(reg_set, K, s0, h)
        logger.debug("restart %d: objective %.6g (%d iterations)", r, res.objective,
                     res.outer_iterations)
        if best is None or res.objective < best.objective:
            best = res
    return best
