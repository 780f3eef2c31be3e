"""Synthetic three-mode PWARX benchmark and Monte-Carlo driver."""
from __future__ import annotations

import csv
import itertools
import logging
import math
import os
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .core import Dataset, PwarxModel, snr_db
from .descent import HyperParams, derive_seed
from .exceptions import PwarxError, ZeroNormalizer
from .selection import select_num_modes, select_order

logger = logging.getLogger(__name__)

# local models, rows ordered as the guard cases: [y-lag 1, u-lag 1, affine]
TRUE_THETA_Y = np.array(
    [
        [-0.4, 1.0, 1.5],
        [0.5, -1.0, -0.5],
        [-0.3, 0.5, -1.7],
    ]
)
GUARD_1 = np.array([4.0, -1.0, 10.0])
GUARD_2 = np.array([5.0, 1.0, -6.0])
INPUT_RANGE = (-4.0, 4.0)
NOISE_RANGE = (-0.8, 0.8)
for _a in (TRUE_THETA_Y, GUARD_1, GUARD_2):
    _a.setflags(write=False)


def true_mode(xt) -> int:
    """Active mode (0-based) of the benchmark system at ``[y[t-1], u[t-1], 1]``.

    Guards are evaluated in order and the first match wins.
    """
    xt = np.asarray(xt, dtype=float)
    if GUARD_1 @ xt < 0:
        return 0
    if GUARD_2 @ xt <= 0:
        return 1
    return 2


def true_model() -> PwarxModel:
    """The benchmark system written as a max-of-affine PWARX model.

    Separator rows ``0, g1, g1 + g2`` reproduce the guard logic for every
    regressor the system reaches with inputs in ``[-4, 4]``: mode 0 requires
    ``y < -1.5`` and mode 2 requires ``y > 0.4``, so the extra comparison
    between them (``9 y + 4``) always agrees with the guards.
    """
    theta_x = np.vstack([np.zeros(3), GUARD_1, GUARD_1 + GUARD_2])
    return PwarxModel(1, 1, TRUE_THETA_Y, theta_x)


def generate_example(T: int, seed: int, noise: float = NOISE_RANGE[1]):
    """Simulate the benchmark with uniform i.i.d. input and output noise.

    ``y[0] = 0`` and carries no noise. Returns ``(data, modes, e)`` where
    ``modes[r]`` is the true mode of regressor row ``r`` (time ``r + 1``) and
    ``e`` is the length-``T`` noise realization.
    """
    if T < 2:
        raise ValueError("T must be >= 2")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    u = rng.uniform(*INPUT_RANGE, size=T)
    e = rng.uniform(-noise, noise, size=T) if noise > 0 else np.zeros(T)
    e[0] = 0.0
    y = np.zeros(T)
    modes = np.empty(T - 1, dtype=np.intp)
    xt = np.ones(3)
    for t in range(1, T):
        xt[0] = y[t - 1]
        xt[1] = u[t - 1]
        k = true_mode(xt)
        modes[t - 1] = k
        y[t] = TRUE_THETA_Y[k] @ xt + e[t]
    return Dataset(u=u, y=y), modes, e


def normalize_boundaries(theta_x, pairing, n_a: int = 1):
    """Boundary normals ``theta_x[i] - theta_x[j]`` scaled so the first input
    coefficient has unit magnitude and the first output coefficient is positive.
    """
    theta_x = np.atleast_2d(np.asarray(theta_x, dtype=float))
    if theta_x.shape[0] < 2:
        raise ValueError("need at least two modes")
    out = []
    for i, j in pairing:
        g = theta_x[i] - theta_x[j]
        scale = abs(g[n_a])
        if scale < 1e-12:
            raise ZeroNormalizer(f"input coefficient of boundary ({i}, {j}) vanishes")
        g = g / scale
        if g[0] < 0:
            g = -g
        out.append(g)
    return np.array(out)


def align_modes(theta_y, reference):
    """Permutation ``perm`` minimizing ``sum_k ||theta_y[perm[k]] - reference[k]||``.

    Exhaustive search; ``theta_y`` may have more modes than ``reference``.
    """
    theta_y = np.atleast_2d(theta_y)
    reference = np.atleast_2d(reference)
    K_ref = reference.shape[0]
    best, best_perm = math.inf, None
    for perm in itertools.permutations(range(theta_y.shape[0]), K_ref):
        d = sum(np.linalg.norm(theta_y[p] - reference[k]) for k, p in enumerate(perm))
        if d < best:
            best, best_perm = d, perm
    return list(best_perm)


def embed_parameters(theta, n_a, n_b, n_a_max, n_b_max):
    """Place vectors of order ``(n_a, n_b)`` into the ``(n_a_max, n_b_max)`` layout."""
    theta = np.atleast_2d(theta)
    out = np.zeros((theta.shape[0], n_a_max + n_b_max + 1))
    out[:, :n_a] = theta[:, :n_a]
    out[:, n_a_max:n_a_max + n_b] = theta[:, n_a:n_a + n_b]
    out[:, -1] = theta[:, -1]
    return out


TASKS = ("select-k", "select-order")
# (i, j) pairs whose separator difference theta_x[i] - theta_x[j] is the guard
BOUNDARY_PAIRS = ((1, 0), (2, 1))
TRUE_BOUNDARIES = np.vstack([GUARD_1, GUARD_2])
TRUE_BOUNDARIES.setflags(write=False)


@dataclass
class RunRecord:
    """Outcome of one Monte-Carlo run.

    ``theta_y`` (aligned to the true modes, in the ``(n_a_max, n_b_max)``
    layout for order selection) and ``boundaries`` are ``None`` when the run
    failed or did not select three modes.
    """

    run: int
    seed: int
    snr: float
    K: Optional[int] = None
    n_a: Optional[int] = None
    n_b: Optional[int] = None
    objective: Optional[float] = None
    theta_y: Optional[np.ndarray] = None
    boundaries: Optional[np.ndarray] = None
    extra_lag_max: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class MonteCarloReport:
    """Per-run outcomes plus the aggregate tables.

    ``layout`` is the ``(n_a, n_b)`` lag layout of the stored parameter
    vectors; lags a run did not select hold zeros.
    """

    task: str
    runs: List[RunRecord] = field(default_factory=list)
    layout: tuple = (1, 1)

    @property
    def n_runs(self) -> int:
        return len(self.runs)

    def successes(self) -> List[RunRecord]:
        """Runs entering the parameter tables.

        For mode-count selection these are the runs that found three modes;
        for order selection every run that completed.
        """
        return [r for r in self.runs if r.ok and r.theta_y is not None]

    def success_rate(self) -> float:
        return len(self.successes()) / self.n_runs if self.n_runs else 0.0

    def histogram(self, what: str) -> dict:
        """Frequency in percent of each selected value of ``K``, ``n_a`` or ``n_b``.

        Failed runs are counted under the key ``None``.
        """
        c = Counter(getattr(r, what) if r.ok else None for r in self.runs)
        return {k: 100.0 * v / self.n_runs for k, v in sorted(c.items(), key=lambda kv: (kv[0] is None, kv[0] or 0))}

    def _coef_labels(self):
        n_a, n_b = self.layout
        return [f"y{i}" for i in range(1, n_a + 1)] + [f"u{i}" for i in range(1, n_b + 1)] + ["affine"]

    def coefficient_table(self):
        """Rows ``(mode, coefficient, true, mean, std, count)``, modes 1-based."""
        ok = self.successes()
        if not ok:
            return []
        stack = np.stack([r.theta_y for r in ok])
        dim = stack.shape[2]
        truth = embed_parameters(TRUE_THETA_Y, 1, 1, *self.layout)
        mean, std = stack.mean(axis=0), stack.std(axis=0)
        labels = self._coef_labels()
        return [
            (k + 1, labels[i], float(truth[k, i]), float(mean[k, i]), float(std[k, i]), len(ok))
            for k in range(3)
            for i in range(dim)
        ]

    def boundary_table(self):
        """Rows ``(separator, coefficient, true, mean, std, count)``, separators 1-based."""
        ok = [r for r in self.successes() if r.boundaries is not None]
        if not ok:
            return []
        stack = np.stack([r.boundaries for r in ok])
        mean, std = stack.mean(axis=0), stack.std(axis=0)
        labels = ["y1", "u1", "affine"]
        return [
            (b + 1, labels[i], float(TRUE_BOUNDARIES[b, i]), float(mean[b, i]), float(std[b, i]), len(ok))
            for b in range(2)
            for i in range(3)
        ]

    def extra_lag_max(self) -> Optional[float]:
        vals = [r.extra_lag_max for r in self.runs if r.ok and r.extra_lag_max is not None]
        return max(vals) if vals else None

    def write(self, outdir) -> List[str]:
        """Write the run list, tables and histograms as CSV; returns the paths."""
        os.makedirs(outdir, exist_ok=True)
        written = []

        def dump(name, header, rows):
            path = os.path.join(outdir, name)
            with open(path, "w", newline="", encoding="utf-8") as f:
                w = csv.writer(f, lineterminator="\n")
                w.writerow(header)
                for row in rows:
                    w.writerow([_fmt(v) for v in row])
            written.append(path)

        dump(
            "runs.csv",
            ["run", "seed", "snr_db", "K", "n_a", "n_b", "objective", "extra_lag_max", "error"],
            [
                (r.run, r.seed, r.snr, r.K, r.n_a, r.n_b, r.objective, r.extra_lag_max, r.error)
                for r in self.runs
            ],
        )
        dump("coefficients.csv", ["mode", "coefficient", "true", "mean", "std", "count"],
             self.coefficient_table())
        if self.task == "select-k":
            dump("boundaries.csv", ["separator", "coefficient", "true", "mean", "std", "count"],
                 self.boundary_table())
            dump("histogram_K.csv", ["value", "frequency_percent"], self.histogram("K").items())
        else:
            dump("histogram_n_a.csv", ["value", "frequency_percent"], self.histogram("n_a").items())
            dump("histogram_n_b.csv", ["value", "frequency_percent"], self.histogram("n_b").items())
        return written


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _boundaries(theta_x, perm):
    pairs = [(perm[i], perm[j]) for i, j in BOUNDARY_PAIRS]
    try:
        return normalize_boundaries(theta_x, pairs)
    except ZeroNormalizer:
        return None


def run_once(task: str, r: int, T: int, h: HyperParams) -> RunRecord:
    """One Monte-Carlo run; errors of the identification are recorded, not raised."""
    data_seed = derive_seed(h.seed, r)
    data, _, e = generate_example(T, data_seed)
    rec = RunRecord(run=r, seed=data_seed, snr=snr_db(data.y, e))
    hr = replace(h, seed=derive_seed(h.seed, r, 1))
    try:
        if task == "select-k":
            K, final, _ = select_num_modes(data, 1, 1, hr)
            rec.K, rec.n_a, rec.n_b = K, 1, 1
            if K == 3:
                perm = align_modes(final.model.theta_y, TRUE_THETA_Y)
                rec.theta_y = final.model.theta_y[perm].copy()
                rec.boundaries = _boundaries(final.model.theta_x, perm)
        else:
            n_a, n_b, final, _ = select_order(data, 3, hr)
            rec.K, rec.n_a, rec.n_b = 3, n_a, n_b
            ty = final.model.theta_y
            core = np.column_stack([ty[:, 0], ty[:, n_a], ty[:, -1]])
            perm = align_modes(core, TRUE_THETA_Y)
            rec.theta_y = embed_parameters(ty[perm], n_a, n_b, h.n_a_max, h.n_b_max)
            extra = np.hstack([ty[:, 1:n_a], ty[:, n_a + 1:n_a + n_b]])
            rec.extra_lag_max = float(np.abs(extra).max()) if extra.size else 0.0
            rec.boundaries = None
        rec.objective = final.objective
    except (PwarxError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        logger.warning("run %d failed: %s", r, exc)
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def run_montecarlo(task: str, runs: int, T: int, h: HyperParams, progress=None) -> MonteCarloReport:
    """Repeat structure selection on independent realizations of the benchmark.

    ``task`` is ``"select-k"`` (orders fixed to 1, ``h.reg`` must be
    ``ridge_linf``) or ``"select-order"`` (three modes, ``h.reg`` must be
    ``elastic_net``). Run ``r`` draws its data from ``derive_seed(h.seed, r)``.
    ``progress`` is called with each finished :class:`RunRecord`.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}, expected one of {TASKS}")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    needed = "ridge_linf" if task == "select-k" else "elastic_net"
    if h.reg.kind != needed:
        raise ValueError(f"task {task!r} needs the {needed!r} regularizer")
    layout = (1, 1) if task == "select-k" else (int(h.n_a_max), int(h.n_b_max))
    report = MonteCarloReport(task, layout=layout)
    for r in range(runs):
        rec = run_once(task, r, T, h)
        report.runs.append(rec)
        if progress is not None:
            progress(rec)
    return report
