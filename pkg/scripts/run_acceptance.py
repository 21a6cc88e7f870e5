#!/usr/bin/env python3
"""
Acceptance Run Script
Runs every experiment at its acceptance settings and writes one report
directory per run
"""
import argparse
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from loguru import logger
from src.config.settings import config_summary, settings, setup_logging
from src.experiments.config import ExperimentConfig
from src.experiments.report import write_report
from src.experiments.runners import run_experiment

ACCEPTANCE_SEED = 20240917

ACCEPTANCE_RUNS = [
    ("oracle_suite", "oracle_suite", {}),
    ("clt_k1", "clt_fixed_k", {"n": 2000, "k": 1, "reps": 20_000}),
    ("clt_k3", "clt_fixed_k", {"n": 1000, "k": 3}),
    ("process_unit", "process_unit", {"n": 1000}),
    ("process_unit_t1", "process_unit", {"n": 2000, "reps": 20_000, "grid": [0.2, 0.4, 0.6, 0.8, 1.0]}),
    ("process_halfline", "process_halfline", {"n": 1000, "grid": [0.25, 0.5, 0.75, 1.0]}),
    ("process_realline", "process_realline", {"n": 1000, "grid": [0.25, 0.5, 0.75, 1.0]}),
    ("ldp_t1", "ldp_t1", {}),
    ("appendix_checks", "appendix_checks", {"reps": 100_000}),
]


def main() -> int:
    parser = argparse.ArgumentParser(description="Run the acceptance experiments")
    parser.add_argument("--seed", type=int, default=ACCEPTANCE_SEED)
    parser.add_argument("--workers", type=int, default=settings.workers)
    parser.add_argument("--output-dir", type=Path, default=settings.output_dir / "acceptance")
    parser.add_argument("--only", nargs="*", default=None, help="run names or experiment ids to run")
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    args = parser.parse_args()

    settings.ensure_directories()
    setup_logging(log_file=settings.log_file.parent / "acceptance.log")
    logger.info("\n" + config_summary())

    failed = []
    for name, experiment_id, overrides in ACCEPTANCE_RUNS:
        if args.only and name not in args.only and experiment_id not in args.only:
            continue
        config = ExperimentConfig.build(experiment_id=experiment_id, seed=args.seed,
                                        workers=args.workers, **overrides)
        report = run_experiment(config)
        for path in write_report(report, args.output_dir / name, args.format):
            logger.info(f"  wrote {path}")
        logger.info(report.summary())
        if not report.passed:
            failed.append(name)

    if failed:
        logger.error(f"❌ failed: {', '.join(failed)}")
        return 1
    logger.info("✓ all acceptance experiments passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
