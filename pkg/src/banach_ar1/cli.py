"""Command-line entry point.

Subcommands:
  run       execute the configured experiment sweep and write all artifacts
  validate  parse and check a configuration, reporting the stationarity gate
  kernel    emit only the covariance-kernel surface CSV

Exit codes: 0 success, 2 configuration error, 3 stationarity-gate failure,
4 numeric failure (degenerate spectrum or covariance), 5 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import harness, model
from .estimation import EigenGapError, TruncationRankError
from .harness import ConfigError, StationarityError
from .model import NoiseCovarianceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GATE = 3
EXIT_NUMERIC = 4
EXIT_IO = 5


def _load_config(args) -> harness.ExperimentConfig:
    config = harness.parse_config(args.config)
    env_seed = os.environ.get(harness.ENV_SEED_VAR)
    if env_seed is not None:
        try:
            config = harness.config_with_seed(config, int(env_seed))
        except ValueError:
            raise ConfigError(f"{harness.ENV_SEED_VAR} must be an integer, got {env_seed!r}") from None
    if getattr(args, "seed", None) is not None:
        config = harness.config_with_seed(config, args.seed)
    if getattr(args, "out", None) is not None:
        config = replace(config, output_dir=args.out)
    return config


def _cmd_run(args) -> int:
    config = _load_config(args)
    results, reports = harness.run_experiment(config, threads=args.threads)
    print(f"wrote {len(results)} replication results for {len(reports)} sample sizes to {config.output_dir}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    config = _load_config(args)
    covariance = model.build_covariance(config.model)
    rho = model.build_rho(config.model)
    model.build_noise_covariance(config.model, covariance, rho)
    gate = model.check_stationarity(rho, j0_max=10)
    if not gate.holds:
        print(f"stationarity gate FAILED: norm of power {gate.j0} is {gate.norm:.6f}", file=sys.stderr)
        return EXIT_GATE
    print(
        f"config ok: modes={config.model.modes}, grid={config.model.grid_len}, "
        f"sizes={list(config.sample_sizes)}, replications={config.replications}; "
        f"stationary at power {gate.j0} with norm {gate.norm:.6f}"
    )
    return EXIT_OK


def _cmd_kernel(args) -> int:
    config = _load_config(args)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    harness.write_kernel_surface(out_dir / "kernel_surface.csv", config)
    print(f"wrote {out_dir / 'kernel_surface.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banach-ar1",
        description="Simulation and consistency diagnostics for functional AR(1) prediction",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in (("run", _cmd_run), ("validate", _cmd_validate), ("kernel", _cmd_kernel)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a key = value configuration file")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="master seed (overrides config and environment)")
        if name == "run":
            p.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")
        p.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StationarityError as exc:
        print(f"model gate failure: {exc}", file=sys.stderr)
        return EXIT_GATE
    except (EigenGapError, TruncationRankError, NoiseCovarianceError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
