#!/usr/bin/env python3
"""
Cluster-compatible driver for one RMPS experiment (optionally a sweep over n).

Usage:
    # Direct run
    python scripts/run_sweep.py --kind extensivity --d 2 --D 4 --k 4 --sweep 4,8,12,16 --samples 20000

    # From a config file, overriding the seed
    python scripts/run_sweep.py --config sweeps/extensivity.toml --seed 11

For qsub submission:
    qsub -v KIND=max-entropy,PHYS_DIM=2,SITES=10,BOND=4,BLOCK=5,SAMPLES=50000 scripts/run_sweep.sh
"""

import argparse
import json
import os
import sys
import time
from pathlib import Path

# Add parent directory to path for imports
script_dir = Path(__file__).parent.absolute()
project_dir = script_dir.parent
sys.path.insert(0, str(project_dir))

from rmps_lab.cli import configure_logging, dispatch
from rmps_lab.config import ConfigError, KINDS, parse_config
from rmps_lab.experiments import REPORT_FILE


def _env_int(name: str):
    value = os.environ.get(name)
    return int(value) if value else None


def main():
    # Environment variables (for qsub); flags override them
    job_id = os.environ.get("PBS_JOBID", os.environ.get("JOB_ID", "local"))
    parser = argparse.ArgumentParser(description="Run one RMPS experiment and record job metadata")
    parser.add_argument("--kind", choices=KINDS, default=os.environ.get("KIND"))
    parser.add_argument("--config", type=str, default=os.environ.get("CONFIG"))
    parser.add_argument("--d", type=int, default=_env_int("PHYS_DIM"))
    parser.add_argument("--n", type=int, default=_env_int("SITES"))
    parser.add_argument("--D", type=int, default=_env_int("BOND"))
    parser.add_argument("--k", type=int, default=_env_int("BLOCK_K"))
    parser.add_argument("--l", type=int, default=_env_int("BLOCK"))
    parser.add_argument("--samples", type=int, default=_env_int("SAMPLES"))
    parser.add_argument("--seed", type=int, default=_env_int("SEED"))
    parser.add_argument("--epsilon", type=float,
                        default=float(os.environ["EPSILON"]) if os.environ.get("EPSILON") else None)
    parser.add_argument("--boundary", choices=("periodic", "open"), default=os.environ.get("BOUNDARY"))
    parser.add_argument("--sweep", type=str, default=os.environ.get("SWEEP"),
                        help="Comma-separated values of n")
    parser.add_argument("--workers", type=int, default=_env_int("WORKERS"))
    parser.add_argument("--results", type=str, default=str(project_dir / "results"),
                        help="Parent directory of the per-job output directories")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    args = parser.parse_args()

    overrides = {name: getattr(args, name)
                 for name in ("kind", "d", "n", "D", "k", "l", "samples", "seed", "epsilon",
                              "boundary", "sweep", "workers")}
    configure_logging(args.verbose, quiet=False)
    try:
        point = parse_config(args.config, overrides)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        sys.exit(2)

    tag = f"{point.kind}_d{point.d}_n{point.n}_D{point.D}_s{point.seed}_{job_id}"
    out_dir = Path(args.results) / tag
    overrides["output_dir"] = str(out_dir)
    cfg = parse_config(args.config, overrides)

    print(f"=== RMPS experiment job ===")
    print(f"Kind:    {cfg.kind}")
    print(f"Params:  d={cfg.d} n={cfg.n} D={cfg.D} k={cfg.k} l={cfg.l} sweep={cfg.sweep}")
    print(f"Samples: {cfg.samples}  seed: {cfg.seed}")
    print(f"Output:  {out_dir}")
    print(f"Job ID:  {job_id}")
    print()

    start_time = time.time()
    code = dispatch(cfg)
    end_time = time.time()

    metadata = {
        "job_id": job_id,
        "kind": cfg.kind,
        "exit_code": code,
        "run_time_seconds": end_time - start_time,
        "report": str(out_dir / REPORT_FILE) if (out_dir / REPORT_FILE).exists() else None,
    }
    with open(out_dir / "job.json", "w") as f:
        json.dump(metadata, f, indent=2)

    print()
    print(f"=== Job complete: exit code {code} in {end_time - start_time:.2f}s ===")
    sys.exit(code)


if __name__ == "__main__":
    main()
