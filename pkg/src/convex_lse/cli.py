"""Command-line interface: ``convex-lse <command> [options]``.

Exit codes: 0 success, 2 bad input, 3 dimension mismatch, 4 non-convergence,
5 I/O failure.
"""

import argparse
import json
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import complexity, estimation, experiments, svg
from .errors import ConvergenceWarning, DimensionMismatch, InvalidSet, NonConvergence, ParameterOutOfRange
from .sets import DEFAULT_TOL, from_descriptor

EXIT_OK, EXIT_PARSE, EXIT_DIM, EXIT_NONCONV, EXIT_IO = 0, 2, 3, 4, 5
SEED_ENV = "CONVEX_LSE_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _floats(text, what):
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated numbers") from None


def _ints(text, what):
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated integers") from None


def _load_set(text):
    if text is None:
        raise UsageError("--set is required")
    if not text.lstrip().startswith("{"):
        try:
            text = Path(text).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read set descriptor: {exc}") from exc
    try:
        return from_descriptor(text)
    except (InvalidSet, ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def _read_vector_file(path):
    try:
        lines = Path(path).read_text().split()
    except OSError as exc:
        raise UsageError(f"cannot read vector file: {exc}") from exc
    try:
        return np.array([float(v) for v in lines])
    except ValueError:
        raise UsageError("vector files hold one float per line") from None


def _resolve_mu(args, n):
    if getattr(args, "mu_file", None):
        return _read_vector_file(args.mu_file), {"mu_file": args.mu_file}
    spec = getattr(args, "mu", None) or "zeros"
    if spec == "zeros":
        return np.zeros(n), {"mu": "zeros"}
    if spec == "ramp":
        return np.arange(1, n + 1) / n, {"mu": "ramp"}
    mu = np.array(_floats(spec, "--mu"))
    return mu, {"mu": mu.tolist()}


def _parse_grid(text):
    parts = text.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
        raise UsageError("--grid takes min:max:points[:log]")
    try:
        lo, hi, pts = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError("--grid takes min:max:points[:log]") from None
    if not 0 < lo < hi or pts < 1:
        raise UsageError("--grid needs 0 < min < max and points >= 1")
    if len(parts) == 4:
        return np.geomspace(lo, hi, pts), {"min": lo, "max": hi, "points": pts, "log": True}
    return np.linspace(lo, hi, pts), {"min": lo, "max": hi, "points": pts, "log": False}


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", newline="\n") as fh:
        fh.write(text)


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _config(args, **extra):
    # threads and output paths never change results and are left out on purpose
    cfg = {"command": args.command}
    for key in ("seed", "set", "samples", "tol", "format", "plot", "name"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    if isinstance(cfg.get("set"), str) and cfg["set"].lstrip().startswith("{"):
        cfg["set"] = json.loads(cfg["set"])
    cfg.update(extra)
    return cfg


def cmd_project(args):
    K = _load_set(args.set)
    if args.y is None and args.y_file is None:
        raise UsageError("--y or --y-file is required")
    y = _read_vector_file(args.y_file) if args.y_file else np.array(_floats(args.y, "--y"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        res = K.project(y, args.tol)
    out = res.to_dict()
    out["config"] = _config(args, y=y.tolist())
    _emit(_json(out), args.out)
    return EXIT_OK if res.converged else EXIT_NONCONV


def cmd_curve(args):
    K = _load_set(args.set)
    mu, mu_cfg = _resolve_mu(args, K.dim)
    if mu.shape[0] != K.dim:
        raise DimensionMismatch(f"mu has length {mu.shape[0]}, set has dimension {K.dim}")
    if args.grid:
        grid, grid_cfg = _parse_grid(args.grid)
    else:
        t_c = K.distance(mu)
        grid = complexity.default_grid(t_c, K.dim)
        grid_cfg = {"default": True}
    curve = complexity.estimate_curve(K, mu, grid, args.samples, args.seed, threads=args.threads)
    cfg = _config(args, grid=grid_cfg, **mu_cfg)
    if args.format == "json":
        body = _json(
            {
                "t": curve.grid.tolist(),
                "f_hat": [complexity._fmt(v) if not np.isfinite(v) else v for v in curve.f_hat],
                "stderr": curve.stderr.tolist(),
                "m_hat": [complexity._fmt(v) if not np.isfinite(v) else v for v in curve.m_hat],
                "t_c_hat": curve.t_c_hat,
                "argmax": curve.argmax(),
                "n_samples": curve.n_samples,
                "seed": curve.seed,
                "config": cfg,
            }
        )
    else:
        body = curve.to_csv()
    _emit(body, args.out)
    if args.plot:
        if args.out is None:
            raise UsageError("--plot needs --out")
        svg.curve_figure(curve).save(f"{args.out}.svg")
    return EXIT_OK


def cmd_tmu(args):
    K = _load_set(args.set)
    mu, mu_cfg = _resolve_mu(args, K.dim)
    if mu.shape[0] != K.dim:
        raise DimensionMismatch(f"mu has length {mu.shape[0]}, set has dimension {K.dim}")
    est = complexity.solve_tmu(
        K, mu, args.samples, args.seed, tol=args.tol, certify=args.certify, threads=args.threads
    )
    out = est.to_dict()
    out["config"] = _config(args, certify=args.certify, **mu_cfg)
    _emit(_json(out), args.out)
    return EXIT_OK


ESTIMATORS = {"lse": None, "mean": estimation.CoordinateMean, "identity": estimation.Identity}


def cmd_risk(args):
    K = _load_set(args.set)
    mu, mu_cfg = _resolve_mu(args, K.dim)
    if mu.shape[0] != K.dim:
        raise DimensionMismatch(f"mu has length {mu.shape[0]}, set has dimension {K.dim}")
    est = estimation.LSE(K) if args.estimator == "lse" else ESTIMATORS[args.estimator]()
    risk = estimation.estimate_risk(est, mu, args.samples, args.seed)
    out = risk.to_dict()
    out["config"] = _config(args, estimator=args.estimator, **mu_cfg)
    _emit(_json(out), args.out)
    return EXIT_OK


def _run_experiment(args):
    common = dict(samples=args.samples, seed=args.seed)
    if args.name == "subspace":
        p_list = _ints(args.p_list, "--p-list")
        return experiments.subspace_sweep(p_list, args.n, threads=args.threads, **common)
    n_list = _ints(args.n_list, "--n-list") if args.n_list else None
    if args.name == "lasso":
        return experiments.lasso_sweep(
            n_list or [128, 256, 512, 1024, 2048], delta=args.delta, threads=args.threads, **common
        )
    if args.name == "isotonic":
        return experiments.isotonic_sweep(
            n_list or [64, 128, 256, 512, 1024, 2048, 4096], args.mu_spec, threads=args.threads, **common
        )
    if args.name == "counterexample":
        return experiments.counterexample_risk(
            n_list or [256, 1024, 4096], with_tmu=args.with_tmu, threads=args.threads, **common
        )
    raise UsageError(f"unknown experiment {args.name!r}")


def cmd_experiment(args):
    started = time.perf_counter()
    report = _run_experiment(args)
    cfg = _config(
        args,
        n_list=args.n_list,
        p_list=args.p_list if args.name == "subspace" else None,
        n=args.n if args.name == "subspace" else None,
        delta=args.delta if args.name == "lasso" else None,
        mu_spec=args.mu_spec if args.name == "isotonic" else None,
        with_tmu=args.with_tmu if args.name == "counterexample" else None,
    )
    payload = report.to_dict()
    payload["run_config"] = {k: v for k, v in cfg.items() if v is not None}
    if args.out is None:
        _emit(_json(payload), None)
    elif args.format == "csv":
        _emit(report.to_csv(), args.out)
        _emit(_json(payload), f"{args.out}.json")
    else:
        _emit(_json(payload), args.out)
        _emit(report.to_csv(), str(Path(args.out).with_suffix(".csv")))
    if args.plot:
        if args.out is None:
            raise UsageError("--plot needs --out")
        svg.sweep_figure(report).save(f"{args.out}.svg")
    print(f"{args.name}: {time.perf_counter() - started:.1f}s", file=sys.stderr)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="convex-lse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, mu=True, mc=True):
        p.add_argument("--set", help="set descriptor: JSON text or a path to a JSON file")
        if mu:
            p.add_argument("--mu", help="comma-separated vector, or 'zeros' / 'ramp'")
            p.add_argument("--mu-file", help="file with one float per line")
        if mc:
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--samples", type=int, default=2000)
        p.add_argument("--threads", type=int, default=None, help="worker count; never changes results")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=["csv", "json"], default="json")

    p = sub.add_parser("project", help="project a point onto a set")
    common(p, mu=False, mc=False)
    p.add_argument("--y")
    p.add_argument("--y-file")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("curve", help="estimate the localized complexity on a grid")
    common(p)
    p.add_argument("--grid", help="min:max:points[:log]")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_curve, format="csv")

    p = sub.add_parser("tmu", help="estimate the maximizer t_mu")
    common(p)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--certify", action="store_true")
    p.set_defaults(func=cmd_tmu)

    p = sub.add_parser("risk", help="Monte Carlo risk of an estimator")
    common(p)
    p.add_argument("--estimator", choices=sorted(ESTIMATORS), default="lse")
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("experiment", help="run a rate sweep")
    p.add_argument("--name", required=True)
    p.add_argument("--n-list")
    p.add_argument("--p-list", default="4,16,64")
    p.add_argument("--n", type=int, default=128, help="ambient dimension for the subspace sweep")
    p.add_argument("--delta", type=float, default=1.0, help="L - |beta|_1 for the lasso sweep")
    p.add_argument("--mu-spec", default="linear", choices=["linear", "constant"])
    p.add_argument("--with-tmu", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--samples", type=int, default=experiments.DEFAULT_SAMPLES)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="json")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        if getattr(args, "samples", 2) < 2:
            raise UsageError("--samples must be at least 2")
        if getattr(args, "threads", None) is not None and args.threads < 1:
            raise UsageError("--threads must be at least 1")
        return args.func(args)
    except UsageError as exc:
        print(f"convex-lse: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DimensionMismatch as exc:
        print(f"convex-lse: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIM
    except NonConvergence as exc:
        print(f"convex-lse: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except (InvalidSet, ParameterOutOfRange, ValueError) as exc:
        print(f"convex-lse: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"convex-lse: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
