"""``strat`` command-line entry point.

Exit codes: 0 success, 2 configuration or input error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="strat", description="Cost-robust strategic classification.")
    ap.add_argument("command", choices=["train", "eval", "hardness", "shift"])
    ap.add_argument("construction", nargs="?", choices=["twoplane", "gaussian-curve"],
                    help="hardness construction (hardness only)")
    ap.add_argument("--config", type=Path, required=True, help="TOML experiment config")
    ap.add_argument("--model", type=Path, help="model CSV (eval and shift)")
    ap.add_argument("--out", type=Path, help="output directory; overrides [output].directory")
    ap.add_argument("--threads", type=int, help="cap on worker threads for linear algebra")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="strat: %(message)s")
    if args.threads is not None:
        if args.threads < 1:
            print("strat: --threads must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        # Only effective if numpy has not been loaded yet in this process.
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)

    from .commands import cmd_eval, cmd_hardness, cmd_shift, cmd_train
    from .data import DataFormatError
    from .norms import ReachabilityError
    from .solvers import NumericalAbort

    try:
        cfg = load_config(args.config)
        out = args.out if args.out is not None else cfg.resolve(cfg.get("output", "directory", "."))
        out.mkdir(parents=True, exist_ok=True)
        if args.command in ("eval", "shift") and args.model is None:
            raise ConfigError(f"{args.command} needs --model")
        if args.command == "hardness" and args.construction is None:
            raise ConfigError("hardness needs a construction: twoplane or gaussian-curve")
        if args.command != "hardness" and args.construction is not None:
            raise ConfigError(f"{args.command} takes no construction argument")
        if args.model is not None and not args.model.is_file():
            raise ConfigError(f"model file not found: {args.model}")

        if args.command == "train":
            cmd_train(cfg, out)
        elif args.command == "eval":
            cmd_eval(cfg, args.model, out)
        elif args.command == "hardness":
            cmd_hardness(cfg, args.construction, out)
        else:
            cmd_shift(cfg, args.model, out)
    except (NumericalAbort, ReachabilityError) as exc:
        print(f"strat: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DataFormatError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"strat: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
