"""Command-line entry point.

Exit status: 0 on success, 2 for configuration problems, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys

import numpy as np

from . import __version__
from .config import RunConfig, load_config, parse_override
from .errors import ConfigError, DomainError, GridMisaligned, NonPhysical, NumericalFailure, StepTooLarge
from .harness import run_evolve, run_spectrum, run_sweep_amplitude, run_sweep_frequency

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("hmlfloquet")

# per-subcommand defaults applied beneath the user's config file
PRESETS = {
    "evolve": {},
    "spectrum": {},
    "validate-config": {},
    "sweep-amplitude": {"sweep": {"parameter": "amplitude"}, "checkpoint_periods": 35,
                        "backend": "lattice", "mqe_kind": "qubit"},
    "sweep-frequency": {"sweep": {"parameter": "frequency"}, "drive": {"amplitude": 16.0},
                        "squeezing": 1.0, "checkpoint_periods": 45, "backend": "lattice",
                        "mqe_kind": "boson"},
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
    common.add_argument("--workers", type=int, metavar="N", help="worker processes for sweeps")
    common.add_argument("--dt", type=float, help="time step; must divide T and t'")
    common.add_argument("--backend", choices=["volterra", "lattice", "both"])
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override any config field, e.g. --set drive.amplitude=16")
    common.add_argument("-v", "--verbose", action="store_true")

    # argparse usage errors exit with 2, the same code as a config error
    parser = argparse.ArgumentParser(
        prog="hmlfloquet",
        description="Driven MQE + magnon lattice: dynamics, Floquet bound states and "
                    "entanglement sweeps.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("evolve", parents=[common], help="solve c(t) and write trajectories")
    sub.add_parser("spectrum", parents=[common], help="quasienergy spectrum and bound states")
    sub.add_parser("sweep-amplitude", parents=[common], help="sweep the drive amplitude")
    sub.add_parser("sweep-frequency", parents=[common], help="sweep the drive frequency")
    sub.add_parser("validate-config", parents=[common], help="check a config and print it")
    return parser


def resolve_config(args) -> RunConfig:
    overrides = [parse_override(item) for item in args.overrides]
    if args.out is not None:
        overrides.append(("output_dir", args.out))
    if args.workers is not None:
        overrides.append(("workers", args.workers))
    if args.dt is not None:
        overrides.append(("grid.dt", args.dt))
    if args.backend is not None:
        overrides.append(("backend", args.backend))
    return load_config(args.config, overrides, base=copy.deepcopy(PRESETS[args.command]))


def _dispatch(cfg: RunConfig, command: str) -> dict:
    if command == "evolve":
        return run_evolve(cfg)
    if command == "spectrum":
        return run_spectrum(cfg)
    if command == "sweep-amplitude":
        res = run_sweep_amplitude(cfg)
    else:
        res = run_sweep_frequency(cfg)
    return {"points": len(res.records), "fbs_values": res.fbs_values()}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "validate-config":
            print(json.dumps(cfg.model_dump(mode="json"), sort_keys=True, indent=2))
            return EXIT_OK
        with np.errstate(invalid="raise", divide="raise", over="raise"):
            summary = _dispatch(cfg, args.command)
    except (ConfigError, GridMisaligned, StepTooLarge) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, NonPhysical, DomainError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    log.info("wrote outputs to %s", cfg.output_dir)
    if args.command.startswith("sweep"):
        print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
