"""Command-line front end.

Settings are resolved as built-in defaults, then the YAML config file, then
command-line flags. Exit codes: 0 success, 1 unexpected failure, 2 invalid
usage or configuration, 3 invalid or unreadable data, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from . import io
from .benchmark import generate_example, run_montecarlo
from .core import bfr, build_regressors, snr_db, simulate_open_loop
from .descent import HyperParams, LocalRegularizer, multi_start_fit
from .exceptions import (
    ConfigError,
    DatasetTooShort,
    DenominatorZero,
    DimensionMismatch,
    InsufficientInitialCondition,
    InvalidOrder,
    LengthMismatch,
    MalformedCsv,
    ModelFormatError,
    SingularSystem,
    ZeroNoisePower,
    ZeroNormalizer,
)
from .prox import SolverSettings
from .selection import select_num_modes, select_order

logger = logging.getLogger("pwarx")

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

OUTPUT_ENV = "PWARX_OUTPUT_DIR"
TASKS = ("generate", "fit", "select-k", "select-order", "simulate", "montecarlo")
MONTECARLO_RESTARTS = 5

_DATA_ERRORS = (
    MalformedCsv,
    ModelFormatError,
    DatasetTooShort,
    DimensionMismatch,
    LengthMismatch,
    InsufficientInitialCondition,
    InvalidOrder,
    OSError,
)
_NUMERICAL_ERRORS = (
    SingularSystem,
    DenominatorZero,
    ZeroNoisePower,
    ZeroNormalizer,
    np.linalg.LinAlgError,
    FloatingPointError,
)

# name -> (type, check, message); checks reject negative weights
_SETTINGS = {
    "rho": (float, lambda v: v > 0, "must be positive"),
    "lam": (float, lambda v: v > 0, "must be positive"),
    "mu": (float, lambda v: v >= 0, "must be non-negative"),
    "nu": (float, lambda v: v >= 0, "must be non-negative"),
    "delta": (float, lambda v: v > 0, "must be positive"),
    "K_max": (int, lambda v: v >= 1, "must be >= 1"),
    "n_max": (int, lambda v: v >= 1, "must be >= 1"),
    "n_a_max": (int, lambda v: v >= 1, "must be >= 1"),
    "n_b_max": (int, lambda v: v >= 1, "must be >= 1"),
    "restarts": (int, lambda v: v >= 1, "must be >= 1"),
    "max_outer": (int, lambda v: v >= 1, "must be >= 1"),
    "tol": (float, lambda v: v > 0, "must be positive"),
    "max_iter": (int, lambda v: v >= 1, "must be >= 1"),
    "seed": (int, lambda v: 0 <= v < 2**64, "must be an unsigned 64-bit integer"),
    "output_dir": (str, lambda v: bool(v), "must be a non-empty path"),
}
DEFAULTS = {
    "rho": 1.0,
    "lam": 1e-3,
    "mu": 0.1,
    "delta": 0.01,
    "K_max": 10,
    "n_max": 10,
    "restarts": 20,
    "max_outer": 50,
    "tol": 1e-9,
    "max_iter": 20000,
    "seed": 0,
}


@dataclass
class RunConfig:
    task: str
    hyper: HyperParams
    output_dir: str
    args: dict = field(default_factory=dict)
    verbosity: int = 0


def _coerce(name, value, where):
    typ, check, msg = _SETTINGS[name]
    if typ is int and isinstance(value, float) and value.is_integer():
        value = int(value)
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if isinstance(value, bool) or not isinstance(value, typ):
        raise ConfigError(f"{where}: {name} must be of type {typ.__name__}, got {value!r}")
    if not check(value):
        raise ConfigError(f"{where}: {name} {msg}, got {value!r}")
    return value


def read_config_file(path) -> dict:
    """Parse a YAML mapping of settings; errors name the offending line."""
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    loader = yaml.SafeLoader(text)
    try:
        node = loader.get_single_node()
        if node is None:
            return {}
        if not isinstance(node, yaml.MappingNode):
            raise ConfigError(f"{path} line {node.start_mark.line + 1}: config must be a mapping")
        out = {}
        for key_node, val_node in node.value:
            line = key_node.start_mark.line + 1
            key = loader.construct_object(key_node, deep=True)
            where = f"{path} line {line}"
            if key not in _SETTINGS:
                raise ConfigError(f"{where}: unknown setting {key!r}")
            value = loader.construct_object(val_node, deep=True)
            out[key] = _coerce(key, value, where)
        return out
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path} line {mark.line + 1}" if mark is not None else str(path)
        raise ConfigError(f"{where}: {getattr(exc, 'problem', None) or exc}") from None
    finally:
        loader.dispose()


def resolve_settings(file_settings=None, flag_settings=None) -> dict:
    """Merge defaults, config file and flags; ``nu`` defaults to ``1 - mu``."""
    s = dict(DEFAULTS)
    s.update(file_settings or {})
    for name, value in (flag_settings or {}).items():
        if value is not None:
            s[name] = _coerce(name, value, "--" + name.replace("_", "-"))
    if "nu" not in s:
        s["nu"] = 1.0 - s["mu"]
        if s["nu"] < 0:
            raise ConfigError(f"nu = 1 - mu is negative for mu = {s['mu']}; set nu explicitly")
    s.setdefault("n_a_max", s["n_max"])
    s.setdefault("n_b_max", s["n_max"])
    return s


def hyper_from_settings(s, kind="ridge_linf") -> HyperParams:
    return HyperParams(
        rho=s["rho"],
        lam=s["lam"],
        reg=LocalRegularizer(kind, s["mu"], s["nu"]),
        delta=s["delta"],
        K_max=s["K_max"],
        n_a_max=s["n_a_max"],
        n_b_max=s["n_b_max"],
        restarts=s["restarts"],
        max_outer=s["max_outer"],
        solver=SolverSettings(tol=s["tol"], max_iters=s["max_iter"]),
        seed=s["seed"],
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("settings")
    g.add_argument("--config", help="YAML file with settings (flags take precedence)")
    g.add_argument("--output-dir", dest="output_dir",
                   help=f"output directory (default: ${OUTPUT_ENV} or the current directory)")
    g.add_argument("-v", "--verbose", action="count", default=0)
    g.add_argument("--seed", type=int)
    for name in ("rho", "lam", "mu", "nu", "delta", "tol"):
        g.add_argument("--" + name, type=float)
    for name in ("K_max", "n_max", "n_a_max", "n_b_max", "restarts", "max_outer", "max_iter"):
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=int)

    parser = argparse.ArgumentParser(
        prog="pwarx", description="Identify piecewise-affine ARX models from input/output data."
    )
    sub = parser.add_subparsers(dest="task", required=True)

    p = sub.add_parser("generate", parents=[common], help="simulate the three-mode benchmark")
    p.add_argument("--T", type=int, default=2000)
    p.add_argument("--noise", type=float, default=0.8, help="half-width of the uniform noise")

    p = sub.add_parser("fit", parents=[common], help="fit a model of given structure")
    p.add_argument("--data", required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--n-a", dest="n_a", type=int, default=1)
    p.add_argument("--n-b", dest="n_b", type=int, default=1)
    p.add_argument("--reg", choices=["ridge", "ridge_linf", "elastic_net"], default="ridge")

    p = sub.add_parser("select-k", parents=[common], help="select the number of modes")
    p.add_argument("--data", required=True)
    p.add_argument("--n-a", dest="n_a", type=int, default=1)
    p.add_argument("--n-b", dest="n_b", type=int, default=1)

    p = sub.add_parser("select-order", parents=[common], help="select the orders")
    p.add_argument("--data", required=True)
    p.add_argument("--K", type=int, required=True)

    p = sub.add_parser("simulate", parents=[common], help="open-loop simulation and best fit rate")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)

    p = sub.add_parser("montecarlo", parents=[common], help="repeat selection on the benchmark")
    p.add_argument("--task", dest="mc_task", choices=["select-k", "select-order"], required=True)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--T", type=int, default=2000)
    return parser


_TASK_ARGS = {"T", "noise", "data", "K", "n_a", "n_b", "reg", "model", "mc_task", "runs"}


def parse_config(argv=None) -> RunConfig:
    """Parse flags (and the config file they name) into a :class:`RunConfig`."""
    ns = build_parser().parse_args(argv)
    file_settings = read_config_file(ns.config) if ns.config else {}
    flags = {k: getattr(ns, k) for k in _SETTINGS if hasattr(ns, k)}
    if ns.task == "montecarlo" and flags.get("restarts") is None and "restarts" not in file_settings:
        flags["restarts"] = MONTECARLO_RESTARTS
    s = resolve_settings(file_settings, flags)
    output_dir = s.get("output_dir") or os.environ.get(OUTPUT_ENV) or "."
    kind = {"select-k": "ridge_linf", "select-order": "elastic_net"}.get(ns.task, "ridge_linf")
    if ns.task == "montecarlo":
        kind = "ridge_linf" if ns.mc_task == "select-k" else "elastic_net"
    if ns.task == "fit":
        kind = ns.reg
    try:
        hyper = hyper_from_settings(s, kind)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    args = {k: v for k, v in vars(ns).items() if k in _TASK_ARGS}
    for name in ("T", "runs", "K"):
        if name in args and args[name] < 1:
            raise ConfigError(f"--{name} must be >= 1, got {args[name]}")
    if args.get("noise", 0) < 0:
        raise ConfigError(f"--noise must be non-negative, got {args['noise']}")
    return RunConfig(ns.task, hyper, output_dir, args, ns.verbose)


def _path(cfg, name):
    return os.path.join(cfg.output_dir, name)


def _write_modes(path, modes, offset):
    modes = np.asarray(modes, dtype=np.int64)
    io.write_table(path, ("t", "mode"), [np.arange(offset, offset + modes.size), modes + 1])


def _fit_outputs(cfg, result, offset, trace=None, trace_name=None):
    io.save_model(_path(cfg, "model.json"), result.model)
    _write_modes(_path(cfg, "modes.csv"), result.modes, offset)
    if trace is not None:
        io.write_trace(_path(cfg, trace_name), trace.to_records())
    print(
        f"K={result.model.K} n_a={result.model.n_a} n_b={result.model.n_b} "
        f"objective={result.objective:.6g} converged={result.converged}"
    )


def run(cfg: RunConfig) -> int:
    """Execute one task; raises on failure (see :func:`main` for exit codes)."""
    os.makedirs(cfg.output_dir, exist_ok=True)
    a, h = cfg.args, cfg.hyper
    if cfg.task == "generate":
        data, modes, e = generate_example(a["T"], h.seed, noise=a["noise"])
        io.write_csv(_path(cfg, "data.csv"), data)
        _write_modes(_path(cfg, "true_modes.csv"), modes, 1)
        if np.any(e != 0):
            print(f"T={data.T} snr_db={snr_db(data.y, e):.4f}")
        else:
            print(f"T={data.T} noiseless")
    elif cfg.task == "fit":
        data = io.load_csv(a["data"])
        rs = build_regressors(data, a["n_a"], a["n_b"])
        _fit_outputs(cfg, multi_start_fit(rs, a["K"], h), rs.offset)
    elif cfg.task == "select-k":
        data = io.load_csv(a["data"])
        _, final, trace = select_num_modes(data, a["n_a"], a["n_b"], h)
        offset = max(a["n_a"], a["n_b"])
        _fit_outputs(cfg, final, offset, trace, "trace_select_k.jsonl")
    elif cfg.task == "select-order":
        data = io.load_csv(a["data"])
        n_a, n_b, final, trace = select_order(data, a["K"], h)
        _fit_outputs(cfg, final, max(n_a, n_b), trace, "trace_select_order.jsonl")
    elif cfg.task == "simulate":
        model = io.load_model(a["model"])
        data = io.load_csv(a["data"])
        t0 = max(model.n_a, model.n_b)
        y_sim = simulate_open_loop(model, data.u, data.y[:t0])
        io.write_table(
            _path(cfg, "predictions.csv"), ("t", "y", "y_sim"),
            [np.arange(t0, data.T), data.y[t0:], y_sim],
        )
        print(f"bfr={bfr(data.y[t0:], y_sim):.4f}")
    elif cfg.task == "montecarlo":

        def progress(rec):
            status = rec.error or f"K={rec.K} n_a={rec.n_a} n_b={rec.n_b}"
            logger.info("run %d: %s", rec.run, status)

        report = run_montecarlo(a["mc_task"], a["runs"], a["T"], h, progress=progress)
        report.write(cfg.output_dir)
        key = "K" if a["mc_task"] == "select-k" else "n_a"
        print(f"runs={report.n_runs} successes={len(report.successes())}")
        print(f"{key} frequency %: {report.histogram(key)}")
        if a["mc_task"] == "select-order":
            print(f"n_b frequency %: {report.histogram('n_b')}")
    else:  # pragma: no cover - argparse restricts the choices
        raise ConfigError(f"unknown task {cfg.task!r}")
    return EXIT_OK


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    if isinstance(exc, _DATA_ERRORS):
        return EXIT_DATA
    if isinstance(exc, _NUMERICAL_ERRORS):
        return EXIT_NUMERICAL
    return EXIT_UNEXPECTED


def main(argv: Optional[list] = None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"pwarx: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.WARNING - 10 * min(cfg.verbosity, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return run(cfg)
    except Exception as exc:
        code = exit_code(exc)
        print(f"pwarx: error: {exc}", file=sys.stderr)
        if code == EXIT_UNEXPECTED:
            logger.exception("unexpected failure")
        return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
