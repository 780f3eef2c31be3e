"""Domain types, regressor construction, inference and evaluation metrics.

Conventions used throughout the package:

* A regressor row is ``[y[t-1], ..., y[t-n_a], u[t-1], ..., u[t-n_b]]``.
* Extended regressors append a trailing 1, so parameter vectors have
  ``n_a + n_b + 1`` entries with the affine term last.
* Mode labels are 0-based integers ``0 .. K-1``. Argmax/argmin ties always
  resolve to the smallest index.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DatasetTooShort,
    DenominatorZero,
    DimensionMismatch,
    InsufficientInitialCondition,
    InvalidOrder,
    LengthMismatch,
    ZeroNoisePower,
)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def add_affine(X):
    """Append a column of ones to a regressor matrix (or a single row)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        return np.append(X, 1.0)
    return np.hstack([X, np.ones((X.shape[0], 1))])


@dataclass(frozen=True)
class Dataset:
    """Paired input/output sequences of a single-input single-output system."""

    u: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        u = _frozen(self.u).ravel()
        y = _frozen(self.y).ravel()
        if u.shape != y.shape:
            raise LengthMismatch(
                f"u and y must have equal length, got {u.size} and {y.size}"
            )
        if u.size == 0:
            raise DatasetTooShort("dataset is empty")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)

    @property
    def T(self) -> int:
        return int(self.u.size)

    def __len__(self):
        return self.T


@dataclass(frozen=True)
class RegressorSet:
    """Lagged regressor matrix with its one-step-ahead targets.

    ``X[r]`` is the regressor of time ``offset + r`` and ``targets[r]`` the
    output at that time.
    """

    X: np.ndarray
    targets: np.ndarray
    n_a: int
    n_b: int
    offset: int

    @property
    def n_x(self) -> int:
        return self.n_a + self.n_b

    @property
    def T_eff(self) -> int:
        return int(self.targets.size)

    @property
    def Xt(self) -> np.ndarray:
        """Extended regressors ``[x' 1]``."""
        return add_affine(self.X)

    def __len__(self):
        return self.T_eff


def check_orders(n_a, n_b):
    n_a, n_b = int(n_a), int(n_b)
    if n_a < 0 or n_b < 0:
        raise InvalidOrder(f"orders must be non-negative, got n_a={n_a}, n_b={n_b}")
    if n_a + n_b == 0:
        raise InvalidOrder("n_a + n_b must be at least 1")
    return n_a, n_b


def build_regressors(data: Dataset, n_a: int, n_b: int) -> RegressorSet:
    """Stack the past outputs and inputs of every usable time step.

    Examples
    --------
    >>> rs = build_regressors(Dataset(u=[0.5, -0.5, 0], y=[1, 2, 3]), 1, 1)
    >>> rs.X.tolist(), rs.targets.tolist()
    ([[1.0, 0.5], [2.0, -0.5]], [2.0, 3.0])
    """
    n_a, n_b = check_orders(n_a, n_b)
    offset = max(n_a, n_b)
    T = data.T
    if T <= offset:
        raise DatasetTooShort(
            f"need more than max(n_a, n_b) = {offset} samples, got T={T}"
        )
    rows = np.arange(offset, T)
    y_lags = [data.y[rows - i] for i in range(1, n_a + 1)]
    u_lags = [data.u[rows - i] for i in range(1, n_b + 1)]
    X = np.column_stack(y_lags + u_lags)
    return RegressorSet(
        X=_frozen(X), targets=_frozen(data.y[offset:]), n_a=n_a, n_b=n_b, offset=offset
    )


@dataclass(frozen=True)
class PwarxModel:
    """K affine sub-models on a polyhedral partition given by a max-of-affine separator.

    ``theta_y[k]`` holds the local model of mode ``k`` and ``theta_x[k]`` its
    separator parameters; both have shape ``(K, n_a + n_b + 1)``.
    """

    n_a: int
    n_b: int
    theta_y: np.ndarray
    theta_x: np.ndarray

    def __post_init__(self):
        n_a, n_b = check_orders(self.n_a, self.n_b)
        theta_y = _frozen(np.atleast_2d(self.theta_y))
        theta_x = _frozen(np.atleast_2d(self.theta_x))
        dim = n_a + n_b + 1
        if theta_y.shape[1] != dim or theta_x.shape[1] != dim:
            raise DimensionMismatch(
                f"parameter vectors must have {dim} entries, got "
                f"{theta_y.shape[1]} (theta_y) and {theta_x.shape[1]} (theta_x)"
            )
        if theta_y.shape[0] != theta_x.shape[0]:
            raise DimensionMismatch("theta_y and theta_x must have the same number of modes")
        if not (np.all(np.isfinite(theta_y)) and np.all(np.isfinite(theta_x))):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "n_a", n_a)
        object.__setattr__(self, "n_b", n_b)
        object.__setattr__(self, "theta_y", theta_y)
        object.__setattr__(self, "theta_x", theta_x)

    @property
    def K(self) -> int:
        return int(self.theta_y.shape[0])

    @property
    def n_x(self) -> int:
        return self.n_a + self.n_b

    def __eq__(self, other):
        if not isinstance(other, PwarxModel):
            return NotImplemented
        return (
            self.n_a == other.n_a
            and self.n_b == other.n_b
            and np.array_equal(self.theta_y, other.theta_y)
            and np.array_equal(self.theta_x, other.theta_x)
        )

    __hash__ = None


@dataclass(frozen=True)
class FitResult:
    """Output of one coordinate-descent run.

    ``objective`` is the full cost (fit + rho-weighted separator loss + both
    regularizers). ``history`` records the cost after each block update.
    """

    model: PwarxModel
    modes: np.ndarray
    objective: float
    outer_iterations: int
    converged: bool
    history: tuple = field(default=(), compare=False, repr=False)


def _check_x(model, X):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != model.n_x:
        raise DimensionMismatch(
            f"regressor has {X2.shape[1]} entries, model expects {model.n_x}"
        )
    return X2, single


def infer_modes(model: PwarxModel, X) -> np.ndarray:
    """Active mode of each regressor row: argmax of the separator scores."""
    X2, _ = _check_x(model, X)
    return np.argmax(add_affine(X2) @ model.theta_x.T, axis=1)


def infer_mode(model: PwarxModel, x) -> int:
    X2, single = _check_x(model, x)
    if not single:
        raise DimensionMismatch("infer_mode expects a single regressor vector")
    return int(infer_modes(model, X2)[0])


def predict(model: PwarxModel, X) -> np.ndarray:
    """One-step-ahead prediction for every regressor row."""
    X2, _ = _check_x(model, X)
    Xt = add_affine(X2)
    k = np.argmax(Xt @ model.theta_x.T, axis=1)
    return np.einsum("ij,ij->i", Xt, model.theta_y[k])


def predict_one_step(model: PwarxModel, x) -> float:
    X2, single = _check_x(model, x)
    if not single:
        raise DimensionMismatch("predict_one_step expects a single regressor vector")
    return float(predict(model, X2)[0])


def simulate_open_loop(model: PwarxModel, u, y_init) -> np.ndarray:
    """Free-run simulation driven by ``u``, feeding back predicted outputs.

    Simulation starts at ``t0 = max(n_a, n_b)``. The last ``n_a`` entries of
    ``y_init`` are taken as the outputs at times ``t0 - n_a .. t0 - 1``.

    Returns the simulated outputs for times ``t0 .. len(u) - 1``, aligned
    with the targets of ``build_regressors`` on the same data.
    """
    u = np.asarray(u, dtype=float).ravel()
    y_init = np.asarray(y_init, dtype=float).ravel()
    n_a, n_b = model.n_a, model.n_b
    if y_init.size < n_a:
        raise InsufficientInitialCondition(
            f"need at least n_a={n_a} initial outputs, got {y_init.size}"
        )
    t0 = max(n_a, n_b)
    T = u.size
    if T <= t0:
        raise DatasetTooShort(f"need more than {t0} input samples, got {T}")
    y = np.zeros(T)
    y[t0 - n_a:t0] = y_init[y_init.size - n_a:]
    theta_y, theta_x = model.theta_y, model.theta_x
    xt = np.empty(n_a + n_b + 1)
    xt[-1] = 1.0
    for t in range(t0, T):
        xt[:n_a] = y[t - n_a:t][::-1]
        xt[n_a:n_a + n_b] = u[t - n_b:t][::-1]
        k = int(np.argmax(theta_x @ xt))
        y[t] = xt @ theta_y[k]
    return y[t0:]


def bfr(y_true, y_pred) -> float:
    """Best fit rate in percent, clipped below at zero."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"lengths differ: {y_true.size} vs {y_pred.size}")
    if y_true.size < 2:
        raise LengthMismatch("need at least two samples")
    den = np.sum((y_true - y_true.mean()) ** 2)
    if den == 0:
        raise DenominatorZero("y_true is constant")
    num = np.sum((y_true - y_pred) ** 2)
    return float(100.0 * max(0.0, 1.0 - np.sqrt(num / den)))


def snr_db(y, e) -> float:
    """Signal-to-noise ratio in dB of a measured output and its noise realization."""
    y = np.asarray(y, dtype=float).ravel()
    e = np.asarray(e, dtype=float).ravel()
    if y.shape != e.shape:
        raise LengthMismatch(f"lengths differ: {y.size} vs {e.size}")
    noise = np.sum(e ** 2)
    if noise <= 0:
        raise ZeroNoisePower("noise sequence has zero energy")
    return float(10.0 * np.log10(np.sum((y - e) ** 2) / noise))
