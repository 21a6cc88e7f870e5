# src/cli/main.py

"""
Command-line entry point

    hml sample | logdet | kernel | clt | process | ldp | appendix | oracle-check

Exit codes: 0 when every requested check passes, 1 when a check fails or a
numerical step breaks down (FactorizationError, QuadratureError), 2 on
configuration errors.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from loguru import logger

from src import __version__
from src.config.settings import settings, setup_logging
from src.experiments.config import ExperimentConfig, ExperimentId
from src.experiments.report import frame_to_csv, write_report, write_text
from src.experiments.runners import run_experiment
from src.ldp.rate import TestFunction, lambda_functional, lambda_t, lambda_t_star, rate_t1_closed
from src.moments.errors import ConfigError, HankelMomentsError
from src.moments.hankel_det import logdet_process
from src.moments.moment_space import CanonicalCoords, IntervalKind
from src.moments.oracle import certify_product_formula
from src.stochastic.limit_theory import kernel_f, kernel_g, r, validate_grid
from src.stochastic.sampling import (
    HalflineParams,
    ReallineParams,
    SeedSpec,
    sample_halfline_canonical,
    sample_moment_vector,
    sample_realline_canonical,
    sample_unit_canonical,
)

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
DUALITY_TOL = 1e-6


# =====================================================================
# ARGUMENT PARSING
# =====================================================================

def parse_grid(text: str) -> List[float]:
    """start:stop:step (stop included) or a comma-separated list"""
    try:
        if ":" in text:
            start, stop, step = (float(part) for part in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(round((stop - start) / step))
            grid = [round(start + i * step, 12) for i in range(count + 1)]
        else:
            grid = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse grid {text!r} (use start:stop:step or t1,t2,...)") from None
    return grid


def parse_values(text: str) -> tuple:
    """Comma-separated numbers; entries with '/' are read as exact rationals"""
    try:
        return tuple(part.strip() if "/" in part else float(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse coordinates {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", type=Path, default=None, help="directory for output files")
    common.add_argument("--format", choices=["json", "csv"], default=None,
                        help="output format (csv for kernel, json otherwise)")
    common.add_argument("--quiet", action="store_true", help="warnings only, no progress bars")
    common.add_argument("--log-level", default=None)

    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, default=None, help="master seed (falls back to HML_SEED)")
    seeded.add_argument("--workers", type=int, default=None)
    seeded.add_argument("--block-size", type=int, default=None)

    experiment = argparse.ArgumentParser(add_help=False)
    experiment.add_argument("--n", type=int, default=1000)
    experiment.add_argument("--reps", type=int, default=10_000)
    experiment.add_argument("--config", type=Path, default=None, help="run from a dumped config")
    experiment.add_argument("--dump-config", type=Path, default=None,
                            help="write the resolved config to this file and exit")

    parser = argparse.ArgumentParser(prog="hml", description="Random moment sequences and Hankel determinants")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common, seeded], help="random moment vectors or canonical coordinates")
    p.add_argument("--interval", choices=[i.value for i in IntervalKind], default="unit")
    p.add_argument("--N", type=int, required=True, help="number of moments (odd on the real line)")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--canonical", action="store_true", help="emit canonical coordinates")
    p.add_argument("--dps", type=int, default=None, help="extended-precision digits for the inverse map")

    p = sub.add_parser("logdet", parents=[common, seeded], help="log-determinant path over a grid")
    p.add_argument("--interval", choices=[i.value for i in IntervalKind], default="unit")
    p.add_argument("--coords", default=None, help="comma-separated canonical coordinates")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--grid", default="0:1:0.1")
    p.add_argument("--gamma", type=float, default=0.0)

    p = sub.add_parser("kernel", parents=[common], help="tabulate f, g or r on a grid")
    p.add_argument("--kernel", choices=["f", "g", "r"], required=True)
    p.add_argument("--grid", default="0:1:0.25")

    p = sub.add_parser("clt", parents=[common, seeded, experiment], help="fixed-k central limit theorem")
    p.add_argument("--k", type=int, default=1)

    p = sub.add_parser("process", parents=[common, seeded, experiment], help="process limits")
    p.add_argument("--interval", choices=[i.value for i in IntervalKind], default="unit")
    p.add_argument("--grid", default="0.2,0.4,0.6,0.8")
    p.add_argument("--gamma", type=float, default=0.0)

    p = sub.add_parser("ldp", parents=[common, seeded, experiment], help="rate functions and the t = 1 suite")
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--x", type=float, default=None, help="evaluate Λ*_t(x)")
    p.add_argument("--lam", type=float, default=None, help="evaluate Λ_t(λ)")
    p.add_argument("--f", default=None, help="evaluate Λ(f): const:c, indicator:t or a JSON piece list")
    p.add_argument("--run", action="store_true", help="run the Monte Carlo suite at t = 1")

    sub.add_parser("appendix", parents=[common, seeded, experiment], help="Beta/Gamma log-moment suite")

    p = sub.add_parser("oracle-check", parents=[common], help="exact certification of the product formulas")
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    return parser


def resolve_seed(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else settings.seed
    if seed is None:
        raise ConfigError(f"`{args.command}` is stochastic: pass --seed or set HML_SEED")
    return seed


def output_dir(args: argparse.Namespace) -> Path:
    return args.output_dir if args.output_dir is not None else settings.output_dir


# =====================================================================
# EXPERIMENT SUBCOMMANDS
# =====================================================================

def experiment_config(args: argparse.Namespace, experiment_id: ExperimentId, **fields) -> ExperimentConfig:
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
        return ExperimentConfig.from_json(text)
    return ExperimentConfig.build(
        experiment_id=experiment_id,
        seed=resolve_seed(args),
        n=args.n,
        reps=args.reps,
        workers=args.workers if args.workers is not None else settings.workers,
        block_size=args.block_size if args.block_size is not None else settings.block_size,
        **fields,
    )


def run_configured(args: argparse.Namespace, config: ExperimentConfig) -> int:
    if args.dump_config is not None:
        write_text(args.dump_config, config.to_json() + "\n")
        print(f"config written to {args.dump_config}")
        return EXIT_OK
    report = run_experiment(config, quiet=args.quiet)
    for path in write_report(report, output_dir(args), args.format):
        print(path)
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_clt(args: argparse.Namespace) -> int:
    return run_configured(args, experiment_config(args, ExperimentId.CLT_FIXED_K, k=args.k))


def cmd_process(args: argparse.Namespace) -> int:
    experiment_id = {
        "unit": ExperimentId.PROCESS_UNIT,
        "halfline": ExperimentId.PROCESS_HALFLINE,
        "realline": ExperimentId.PROCESS_REALLINE,
    }[args.interval]
    config = experiment_config(args, experiment_id, grid=parse_grid(args.grid), gamma=args.gamma)
    return run_configured(args, config)


def cmd_appendix(args: argparse.Namespace) -> int:
    return run_configured(args, experiment_config(args, ExperimentId.APPENDIX_CHECKS))


def cmd_ldp(args: argparse.Namespace) -> int:
    if args.run:
        return run_configured(args, experiment_config(args, ExperimentId.LDP_T1))
    if args.f is None and args.t is None:
        raise ConfigError("ldp needs --run, --f, or --t with --x / --lam")

    ok = True
    if args.f is not None:
        evaluation = lambda_functional(TestFunction.from_spec(args.f))
        print(json.dumps(evaluation.to_dict()))
    if args.t is not None:
        if args.x is None and args.lam is None:
            raise ConfigError("--t needs --x or --lam")
        if args.lam is not None:
            print(f"Lambda_t({args.t:g}, {args.lam:g}) = {lambda_t(args.t, args.lam):.6f}")
        if args.x is not None:
            value = lambda_t_star(args.t, args.x)
            print(f"Lambda*_t({args.t:g}, {args.x:g}) = {value:.6f}")
            if args.t == 1.0:
                closed = rate_t1_closed(args.x)
                match = bool(abs(value - closed) <= DUALITY_TOL or (np.isinf(value) and np.isinf(closed)))
                print(f"closed form {closed:.6f} match={str(match).lower()}")
                ok = ok and match
    return EXIT_OK if ok else EXIT_FAILED


# =====================================================================
# EVALUATOR SUBCOMMANDS
# =====================================================================

def _params(interval: IntervalKind, N: int, gamma: float):
    if interval is IntervalKind.HALFLINE:
        return HalflineParams.unit_mean(N, [gamma] * N)
    if interval is IntervalKind.REALLINE:
        if N % 2 == 0:
            raise ConfigError(f"real-line vectors have odd length, got N = {N}")
        n = (N + 1) // 2
        return ReallineParams.unit_mean(n, [gamma] * (n - 1))
    return None


def _write_frame(args: argparse.Namespace, name: str, frame: pd.DataFrame, seed: Optional[int]) -> int:
    if args.format == "json":
        text = json.dumps({"seed": seed, "version": __version__,
                           "rows": frame.to_dict(orient="records")}, indent=2) + "\n"
        path = write_text(output_dir(args) / f"{name}.json", text)
    else:
        path = write_text(output_dir(args) / f"{name}.csv", frame_to_csv(frame, seed))
    print(path)
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    seed = resolve_seed(args)
    interval = IntervalKind(args.interval)
    if args.N < 1 or args.count < 1:
        raise ConfigError("--N and --count must be positive")
    params = _params(interval, args.N, args.gamma)
    rows = []
    for draw in range(args.count):
        stream = SeedSpec(seed=seed, stream_id=draw)
        if args.canonical:
            if interval is IntervalKind.UNIT:
                values = sample_unit_canonical(args.N, stream).values
            elif interval is IntervalKind.HALFLINE:
                values = sample_halfline_canonical(params, stream).values
            else:
                values = sample_realline_canonical(params, stream).values
        else:
            values = sample_moment_vector(interval, args.N, params, stream, dps=args.dps).m
        rows.extend({"draw": draw, "index": i, "value": float(v)} for i, v in enumerate(values, start=1))
    name = f"sample_{interval.value}_{'canonical' if args.canonical else 'moments'}"
    return _write_frame(args, name, pd.DataFrame(rows, columns=["draw", "index", "value"]), seed)


def cmd_logdet(args: argparse.Namespace) -> int:
    interval = IntervalKind(args.interval)
    grid = validate_grid(parse_grid(args.grid))
    seed = None
    if args.coords is not None:
        c = CanonicalCoords(interval, parse_values(args.coords))
        n = args.n if args.n is not None else (c.N + 1) // 2 if interval is IntervalKind.REALLINE else c.N // 2
    else:
        if args.n is None:
            raise ConfigError("logdet needs --coords or --n with --seed")
        seed, n = resolve_seed(args), args.n
        stream = SeedSpec(seed=seed)
        if interval is IntervalKind.UNIT:
            c = sample_unit_canonical(2 * n, stream)
        elif interval is IntervalKind.HALFLINE:
            c = sample_halfline_canonical(_params(interval, 2 * n, args.gamma), stream)
        else:
            c = sample_realline_canonical(_params(interval, 2 * n - 1, args.gamma), stream)
    path = logdet_process(c, n, grid)
    return _write_frame(args, f"logdet_{interval.value}", path.to_frame(), seed)


def cmd_kernel(args: argparse.Namespace) -> int:
    grid = validate_grid(parse_grid(args.grid))
    if args.kernel == "r":
        frame = pd.DataFrame({"t": grid, "value": np.atleast_1d(r(grid))})
    else:
        kernel = kernel_f if args.kernel == "f" else kernel_g
        frame = pd.DataFrame([{"s": s, "t": t, "value": kernel(s, t)} for s in grid for t in grid],
                             columns=["s", "t", "value"])
    return _write_frame(args, f"kernel_{args.kernel}", frame, None)


def cmd_oracle_check(args: argparse.Namespace) -> int:
    ok = True
    for interval in IntervalKind:
        report = certify_product_formula(interval, args.k, args.trials, args.seed)
        print(report.summary())
        if not report.passed:
            print(f"  counterexample: {report.counterexample}")
        ok = ok and report.passed
    return EXIT_OK if ok else EXIT_FAILED


DEFAULT_FORMATS = {"kernel": "csv"}


COMMANDS = {
    "sample": cmd_sample,
    "logdet": cmd_logdet,
    "kernel": cmd_kernel,
    "clt": cmd_clt,
    "process": cmd_process,
    "ldp": cmd_ldp,
    "appendix": cmd_appendix,
    "oracle-check": cmd_oracle_check,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.format is None:
        args.format = DEFAULT_FORMATS.get(args.command, "json")
    settings.ensure_directories()
    setup_logging("WARNING" if args.quiet else args.log_level, settings.log_file)
    try:
        return COMMANDS[args.command](args)
    except ArithmeticError as exc:
        logger.error(f"{args.command}: {exc}")
        return EXIT_FAILED
    except (HankelMomentsError, ValueError) as exc:
        logger.error(f"{args.command}: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
