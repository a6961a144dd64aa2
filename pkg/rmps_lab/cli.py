"""
Command-line front end.

Usage:
    rmps-lab max-entropy --d 2 --n 4 --D 2 --l 1 --samples 100000 --seed 7
    rmps-lab extensivity --config sweep.toml --workers 8
    rmps-lab exact --d 2 --n 4 --D 2 --l 1 --k 2
    rmps-lab selftest

Exit codes: 0 every check passed, 1 a check failed, 2 usage or configuration
error, 3 capacity exceeded, 4 any other runtime error.
"""

from pathlib import Path
from typing import List, Optional
import argparse
import json
import logging
import sys

from .config import KINDS, ConfigError, ExperimentConfig, parse_config, serialize_config
from .equilibration import GapConditionError
from .experiments import (SAMPLES_FILE, ExperimentReport, run_exact, run_experiment,
                          run_selftest, write_report, write_samples_csv)
from .plotting import PLOT_FILE, emit_plot_script
from .tensor_core import CapacityExceeded

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_RUNTIME = 4

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_FILE = "run.log"
CONFIG_FILE = "config.toml"

HELP = {
    "equilibration": "effective dimension and infinite-time fluctuations against a GUE Hamiltonian",
    "norm-concentration": "moments and tail of <psi|psi>",
    "extensivity": "purity with every k-th site traced out, and the S_2 slope in n/k",
    "max-entropy": "purity of a contiguous block of l sites",
    "local-obs": "second moment of a single-site observable",
    "frame-potential": "frame potential and distance from a 2-design",
    "exact": "closed-form values and oracle cross-checks, no sampling",
    "selftest": "oracle grid and pinned values",
}


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, default=None, help="TOML or JSON config file")
    p.add_argument("--d", type=int, default=None, help="Physical dimension")
    p.add_argument("--n", type=int, default=None, help="Number of sites")
    p.add_argument("--D", type=int, default=None, help="Bond dimension")
    p.add_argument("--k", type=int, default=None, help="Trace out every k-th site")
    p.add_argument("--l", type=int, default=None, help="Block length")
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo samples")
    p.add_argument("--seed", type=int, default=None, help="Master seed (64-bit)")
    p.add_argument("--epsilon", type=float, default=None, help="Norm deviation threshold")
    p.add_argument("--observable", type=str, default=None,
                   help="'pauli-z' or a .npy / text matrix file")
    p.add_argument("--boundary", choices=("periodic", "open"), default=None)
    p.add_argument("--sweep", type=str, default=None, help="Comma-separated values of n")
    p.add_argument("--workers", type=int, default=None,
                   help="Worker processes (capped by RMPS_LAB_THREADS)")
    p.add_argument("--out", "-o", dest="output_dir", type=str, default=None,
                   help="Output directory")
    p.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    p.add_argument("--quiet", "-q", action="store_true", help="Warnings only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmps-lab",
        description="Second moments of random matrix product states: exact values, "
                    "oracles and Monte Carlo checks",
    )
    sub = parser.add_subparsers(dest="kind", metavar="KIND")
    sub.required = True
    for kind in KINDS:
        _add_common_flags(sub.add_parser(kind, help=HELP[kind]))
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Flags override the config file, which overrides the defaults."""
    overrides = {
        name: getattr(args, name)
        for name in ("d", "n", "D", "k", "l", "samples", "seed", "epsilon", "observable",
                     "boundary", "sweep", "workers", "output_dir")
    }
    overrides["kind"] = args.kind
    return parse_config(args.config, overrides)


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


def _format_value(x: Optional[float]) -> str:
    return "-" if x is None else f"{x:.6g}"


def print_summary(report: ExperimentReport) -> None:
    print(f"=== {report.kind} (seed {report.seed}, {report.wall_clock_seconds:.2f}s) ===")
    print(f"{'quantity':<44} {'mean':>12} {'stderr':>10} {'exact':>12} {'bound':>12}  pass")
    for r in report.records:
        bound = r.bound_value if r.bound_value is not None else r.lower_bound_value
        print(f"{r.name:<44} {_format_value(r.mean):>12} {_format_value(r.stderr):>10} "
              f"{_format_value(r.exact_value):>12} {_format_value(bound):>12}  "
              f"{'yes' if r.passed else 'NO'}")


def _run(cfg: ExperimentConfig) -> ExperimentReport:
    if cfg.kind == "selftest":
        return run_selftest(cfg.seed)
    if cfg.kind == "exact":
        report = run_exact(cfg)
        print(json.dumps(report.to_dict()["extras"]["closed_forms"], indent=2))
        return report
    return run_experiment(cfg.kind, cfg)


def dispatch(cfg: ExperimentConfig) -> int:
    """Run a validated config, write its artifacts and map the outcome to an exit code."""
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out_dir / LOG_FILE, mode="w")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root = logging.getLogger()
    root.addHandler(handler)
    try:
        (out_dir / CONFIG_FILE).write_text(serialize_config(cfg))
        try:
            report = _run(cfg)
        except CapacityExceeded as e:
            logger.error("capacity exceeded: %s", e)
            return EXIT_CAPACITY
        except (ConfigError, ValueError) as e:
            logger.error("invalid parameters: %s", e)
            return EXIT_USAGE
        except GapConditionError as e:
            logger.error("%s", e)
            return EXIT_RUNTIME
        except Exception as e:
            logger.error("%s failed: %s", cfg.kind, e)
            logger.debug("traceback", exc_info=True)
            return EXIT_RUNTIME

        path = write_report(report, out_dir)
        logger.info("report written to %s", path)
        if report.samples:
            write_samples_csv(report, out_dir / SAMPLES_FILE)
        if report.sweep:
            emit_plot_script(report, out_dir / PLOT_FILE)
        print_summary(report)

        if not report.all_passed:
            logger.warning("failed checks: %s", ", ".join(report.failed()))
            return EXIT_CHECK_FAILED
        return EXIT_OK
    finally:
        root.removeHandler(handler)
        handler.close()


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    configure_logging(args.verbose, args.quiet)
    try:
        cfg = config_from_args(args)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
