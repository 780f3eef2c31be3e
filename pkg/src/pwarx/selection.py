"""Regularization-driven selection of the number of modes and of the orders.

Both procedures start from an over-parameterized model, fit it with a
shrinking local regularizer, prune what the shrinkage flagged, and repeat
until the structure stops changing. A last fit without the shrinkage term
(``nu = 0``) produces the returned model.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from .core import Dataset, FitResult, build_regressors
from .descent import HyperParams, derive_seed, multi_start_fit

logger = logging.getLogger(__name__)

# seed-derivation keys, so every stage draws independent initial sequences
_STAGE_SELECT = 1
_STAGE_FINAL = 2


def detect_redundant(theta_y, delta: float) -> set:
    """Modes whose whole parameter vector satisfies ``||theta||_inf <= delta``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    theta_y = np.atleast_2d(theta_y)
    return {int(k) for k in np.flatnonzero(np.max(np.abs(theta_y), axis=1) <= delta)}


def detect_empty_clusters(modes, K: int, T: int) -> set:
    """Modes holding at most 1% of the ``T`` samples."""
    if T <= 0:
        raise ValueError("T must be positive")
    counts = np.bincount(np.asarray(modes, dtype=np.intp).ravel(), minlength=K)[:K]
    return {int(k) for k in np.flatnonzero(counts <= 0.01 * T)}


def count_active_orders(theta_y, n_a: int, n_b: int, delta: float) -> Tuple[int, int]:
    """Largest number of significant output and input lags over all modes.

    A lag is significant when ``|coefficient| >= delta``; the affine term is
    never counted. Both counts are floored at 1.
    """
    theta_y = np.atleast_2d(theta_y)
    if theta_y.shape[1] != n_a + n_b + 1:
        raise ValueError(
            f"parameter vectors have {theta_y.shape[1]} entries, expected {n_a + n_b + 1}"
        )
    big = np.abs(theta_y) >= delta
    na_hat = int(big[:, :n_a].sum(axis=1).max()) if n_a else 0
    nb_hat = int(big[:, n_a:n_a + n_b].sum(axis=1).max()) if n_b else 0
    return max(na_hat, 1), max(nb_hat, 1)


@dataclass
class KSelectionStep:
    iteration: int
    K: int
    redundant: List[int]
    empty: List[int]
    result: FitResult
    clamped: bool = False

    def to_record(self):
        return {
            "iteration": self.iteration,
            "K": self.K,
            "objective": self.result.objective,
            "redundant": self.redundant,
            "empty": self.empty,
            "clamped": self.clamped,
        }


@dataclass
class KSelectionTrace:
    steps: List[KSelectionStep] = field(default_factory=list)
    K_star: Optional[int] = None

    @property
    def degenerate(self) -> bool:
        return any(s.clamped for s in self.steps)

    def to_records(self):
        return [s.to_record() for s in self.steps]


@dataclass
class OrderSelectionStep:
    iteration: int
    n_a: int
    n_b: int
    result: FitResult
    clamped: bool = False

    def to_record(self):
        return {
            "iteration": self.iteration,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "objective": self.result.objective,
            "clamped": self.clamped,
        }


@dataclass
class OrderSelectionTrace:
    steps: List[OrderSelectionStep] = field(default_factory=list)
    n_a_star: Optional[int] = None
    n_b_star: Optional[int] = None

    def to_records(self):
        return [s.to_record() for s in self.steps]


def select_num_modes(data: Dataset, n_a: int, n_b: int, h: HyperParams):
    """Shrink the number of modes from ``h.K_max``.

    Each iteration runs a multi-start fit with the infinity-norm shrinkage.
    Modes whose parameters collapsed below ``h.delta`` are dropped; if none
    collapsed, modes with at most 1% of the samples are dropped instead.

    Returns
    -------
    K_star : int
    final : FitResult
        Multi-start fit at ``K_star`` with ``nu = 0``.
    trace : KSelectionTrace
    """
    if h.reg.kind != "ridge_linf":
        raise ValueError("mode-count selection needs the 'ridge_linf' regularizer")
    reg_set = build_regressors(data, n_a, n_b)
    trace = KSelectionTrace()
    K = int(h.K_max)
    for j in range(1, int(h.K_max) + 1):
        res = multi_start_fit(reg_set, K, replace(h, seed=derive_seed(h.seed, _STAGE_SELECT, j)))
        redundant = detect_redundant(res.model.theta_y, h.delta)
        empty = set()
        if redundant:
            K_new = K - len(redundant)
        else:
            empty = detect_empty_clusters(res.modes, K, data.T)
            K_new = K - len(empty)
        clamped = K_new < 1
        if clamped:
            logger.warning("select_num_modes: every mode was pruned, keeping K = 1")
            K_new = 1
        trace.steps.append(
            KSelectionStep(j, K_new, sorted(redundant), sorted(empty), res, clamped)
        )
        logger.info("select_num_modes: iteration %d, K %d -> %d", j, K, K_new)
        if K_new == K:
            break
        K = K_new
    trace.K_star = K
    final = multi_start_fit(
        reg_set,
        K,
        replace(h, reg=h.reg.without_shrinkage(), seed=derive_seed(h.seed, _STAGE_FINAL)),
    )
    return K, final, trace


def select_order(data: Dataset, K: int, h: HyperParams):
    """Shrink the output/input orders from ``(h.n_a_max, h.n_b_max)``.

    Each iteration rebuilds the regressors at the current orders, runs a
    multi-start elastic-net fit and keeps, for every mode, the number of
    coefficients above ``h.delta``; the largest count over the modes becomes
    the new order. The shortest delays are the ones retained.

    Returns
    -------
    n_a_star, n_b_star : int
    final : FitResult
        Multi-start fit at the selected orders with ``nu = 0``.
    trace : OrderSelectionTrace
    """
    if h.reg.kind != "elastic_net":
        raise ValueError("order selection needs the 'elastic_net' regularizer")
    if h.n_a_max < 1 or h.n_b_max < 1:
        raise ValueError("n_a_max and n_b_max must be >= 1")
    trace = OrderSelectionTrace()
    n_a, n_b = int(h.n_a_max), int(h.n_b_max)
    for j in range(1, n_a + n_b + 1):
        reg_set = build_regressors(data, n_a, n_b)
        res = multi_start_fit(reg_set, K, replace(h, seed=derive_seed(h.seed, _STAGE_SELECT, j)))
        big = np.abs(res.model.theta_y) >= h.delta
        clamped = not big[:, :n_a].any() or not big[:, n_a:n_a + n_b].any()
        na_new, nb_new = count_active_orders(res.model.theta_y, n_a, n_b, h.delta)
        trace.steps.append(OrderSelectionStep(j, na_new, nb_new, res, clamped))
        logger.info(
            "select_order: iteration %d, (n_a, n_b) (%d, %d) -> (%d, %d)",
            j, n_a, n_b, na_new, nb_new,
        )
        if (na_new, nb_new) == (n_a, n_b):
            break
        n_a, n_b = na_new, nb_new
    trace.n_a_star, trace.n_b_star = n_a, n_b
    reg_set = build_regressors(data, n_a, n_b)
    final = multi_start_fit(
        reg_set,
        K,
        replace(h, reg=h.reg.without_shrinkage(), seed=derive_seed(h.seed, _STAGE_FINAL)),
    )
    return n_a, n_b, final, trace
