"""Command-line front end.

Subcommands: generate, fit, replicate, select-dim.  Flags mirror the
RunConfig keys and can also come from a flat key=value config file via
--config; explicit flags win.  Exit codes: 0 success, 1 usage or
configuration problems, 2 data problems, 3 numerical failures.
"""

import argparse
import json
import sys
import time

import numpy as np

from .config import _COERCE, format_config, parse_config
from .dataio import read_dataset, write_dataset
from .dimension import select_dimension
from .errors import ConfigError, DatasetError, SdrError, ValidationError
from .estimators import FitOptions, embed_responses, fit_method, parse_method
from .evaluation import run_replications, write_results_csv, write_summary_csv
from .simgen import ModelSpec, generate
from .smoothing import KernelSpec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_d_flag(value):
    if value == "auto":
        return "auto"
    return int(value)


def _add_common(sub):
    sub.add_argument("--config", help="flat key=value configuration file")
    sub.add_argument("--model", help="simulation model id (I1, I2, II1, II2, III)")
    sub.add_argument("--dataset", help="input dataset CSV path")
    sub.add_argument("--method", help="estimator name, e.g. eu-imave")
    sub.add_argument("--d", type=_parse_d_flag, help="target dimension or 'auto'")
    sub.add_argument("--p", type=int, help="number of predictors")
    sub.add_argument("--n", type=int, help="sample size")
    sub.add_argument("--sigma", type=float, help="noise scale")
    sub.add_argument("--kernel", choices=["quartic", "gaussian"], help="kernel kind")
    sub.add_argument("--c0", type=float, help="bandwidth constant")
    sub.add_argument("--max-iters", type=int, help="estimator iterations")
    sub.add_argument("--ridge", type=float, help="explicit ridge level")
    sub.add_argument("--bandwidth", type=float, help="explicit fixed bandwidth")
    sub.add_argument(
        "--bandwidth-policy", choices=["schedule", "silverman"], help="bandwidth rule"
    )
    sub.add_argument(
        "--standardize", action=argparse.BooleanOptionalAction, default=None,
        help="marginally standardize predictors (default on)",
    )
    sub.add_argument("--reps", type=int, help="replication count")
    sub.add_argument("--seed", type=int, help="master seed")
    sub.add_argument(
        "--threads", type=int,
        help="worker count (recorded only; results do not depend on it)",
    )
    sub.add_argument("--p-max", type=int, help="largest working dimension for CV")
    sub.add_argument("--out", help="primary output path")
    sub.add_argument("--summary", help="summary CSV path")
    sub.add_argument("--report", help="JSON run report path")
    sub.add_argument("--truth", help="path for the true basis CSV (generate)")


def build_parser():
    parser = _Parser(prog="manifold-sdr", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("generate", "emit a simulated dataset as CSV"),
        ("fit", "estimate the basis on a dataset or simulated model"),
        ("replicate", "run a seeded replication study and aggregate errors"),
        ("select-dim", "cross-validate the structural dimension"),
    ):
        sub = subs.add_parser(name, help=help_text)
        _add_common(sub)
    return parser


def _config_from_args(args):
    overrides = {}
    for key in _COERCE:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    cfg = parse_config(args.config, overrides)
    cfg.command = args.command
    return cfg


def _fit_options(cfg):
    return FitOptions(
        max_iters=cfg.max_iters,
        kernel=KernelSpec(cfg.kernel),
        c0=cfg.c0,
        ridge=cfg.ridge,
        seed=cfg.seed,
        standardize=cfg.standardize,
        bandwidth_policy=cfg.bandwidth_policy,
        fixed_bandwidth=cfg.bandwidth,
    )


def _model_spec(cfg):
    if cfg.model is None:
        raise ConfigError("this command needs --model (or a dataset)")
    if cfg.p is None or cfg.n is None:
        raise ConfigError("--p and --n are required with --model")
    return ModelSpec(model=cfg.model, p=cfg.p, n=cfg.n, sigma=cfg.sigma, seed=cfg.seed)


def _load_data(cfg):
    if cfg.dataset is not None:
        X, Y, meta = read_dataset(cfg.dataset)
        return X, Y, meta["manifold"]
    data = generate(_model_spec(cfg))
    return data.X, data.Y, data.manifold


def _require_out(cfg):
    if cfg.out is None:
        raise ConfigError("--out is required")
    return cfg.out


def _write_basis_csv(path, B):
    B = np.atleast_2d(B)
    with open(path, "w") as fh:
        fh.write(",".join(f"b{c + 1}" for c in range(B.shape[1])) + "\n")
        for row in B:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def cmd_generate(cfg):
    spec = _model_spec(cfg)
    data = generate(spec)
    write_dataset(_require_out(cfg), data.X, data.Y, data.manifold, m=data.m)
    if cfg.truth is not None:
        _write_basis_csv(cfg.truth, data.B0)
    print(f"wrote {data.X.shape[0]} samples to {cfg.out}")
    return EXIT_OK


def cmd_fit(cfg):
    X, Y, manifold = _load_data(cfg)
    metric, _ = parse_method(cfg.method)
    if (manifold == "sphere") != (metric == "sphere"):
        raise ConfigError(
            f"method {cfg.method} does not match the {manifold} responses"
        )
    opts = _fit_options(cfg)
    t0 = time.perf_counter()
    cv = None
    d = cfg.d
    if d == "auto":
        cv = select_dimension(Y, X, metric, method="iopg", opts=opts, p_max=cfg.p_max)
        d = cv.d_hat
    sample = embed_responses(Y, metric, X)
    result = fit_method(cfg.method, sample, d, opts)
    wall_ms = 1000.0 * (time.perf_counter() - t0)
    _write_basis_csv(_require_out(cfg), result.basis)
    if cfg.report is not None:
        report = {
            "command": "fit",
            "effective_config": format_config(cfg),
            "method": cfg.method,
            "d": int(d),
            "seed": cfg.seed,
            "wallclock_ms": wall_ms,
            "skipped_anchors": int(result.skipped_anchors),
            "final_bandwidth": float(result.final_bandwidth),
            "basis": result.basis.tolist(),
            "basis_standardized": result.basis_std.tolist(),
        }
        if cv is not None:
            report["cv_values"] = [
                None if not np.isfinite(v) else float(v) for v in cv.cv_values
            ]
        with open(cfg.report, "w") as fh:
            json.dump(report, fh, indent=2)
    print(f"fit {cfg.method} with d={d}; basis written to {cfg.out}")
    return EXIT_OK


def cmd_replicate(cfg):
    spec = _model_spec(cfg)
    result = run_replications(spec, cfg.method, _fit_options(cfg), R=cfg.reps)
    write_results_csv(_require_out(cfg), result)
    if cfg.summary is not None:
        write_summary_csv(cfg.summary, result)
    print(
        f"{spec.model} (p={spec.p}, n={spec.n}, sigma={spec.sigma}) {cfg.method}: "
        f"mean={result.mean:.4f} sd={result.sd:.4f} failures={result.n_failed}/{cfg.reps}"
    )
    return EXIT_NUMERICAL if result.flagged else EXIT_OK


def cmd_select_dim(cfg):
    X, Y, manifold = _load_data(cfg)
    metric, algo = parse_method(cfg.method)
    if (manifold == "sphere") != (metric == "sphere"):
        raise ConfigError(
            f"method {cfg.method} does not match the {manifold} responses"
        )
    cv = select_dimension(Y, X, metric, method=algo, opts=_fit_options(cfg), p_max=cfg.p_max)
    out = _require_out(cfg)
    with open(out, "w") as fh:
        fh.write("l,cv_value,bandwidth,skipped,selected\n")
        for i, value in enumerate(cv.cv_values):
            l = i + 1
            text = "" if not np.isfinite(value) else repr(float(value))
            fh.write(
                f"{l},{text},{repr(float(cv.bandwidths[i]))},"
                f"{int(cv.skipped[i])},{int(l == cv.d_hat)}\n"
            )
    print(f"selected d={cv.d_hat}; CV curve written to {out}")
    return EXIT_OK


_DISPATCH = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "replicate": cmd_replicate,
    "select-dim": cmd_select_dim,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_OK
    try:
        cfg = _config_from_args(args)
        return _DISPATCH[cfg.command](cfg)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasetError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SdrError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
