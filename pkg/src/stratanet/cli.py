"""Command-line entry point: ``stratanet <subcommand> --config FILE [options]``.

Exit status
-----------
0  success
1  input error (missing or malformed files, invalid options)
2  degenerate analysis in a single-stage run, or any degenerate result or
   warning under ``--strict``

Log verbosity comes from the ``STRATANET_LOG_LEVEL`` environment variable
(default ``WARNING``).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import PipelineConfig
from .model import InputError, StratanetError
from .pipeline import PIPELINE_ORDER, Workspace, run_pipeline, run_stage

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stratanet", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=[*PIPELINE_ORDER, "pipeline"])
    parser.add_argument("--config", required=True, help="JSON pipeline configuration")
    parser.add_argument("--seed", type=int, help="master seed (overrides the config)")
    parser.add_argument("--alpha", type=float, help="backbone significance level")
    parser.add_argument("--bootstrap-n", type=int, help="bootstrap samples per level")
    parser.add_argument("--fix-size-to", metavar="LEVEL", help="resample every level at this level's weight")
    parser.add_argument("--level", action="append", metavar="LEVEL",
                        help="restrict to a level (repeatable)")
    parser.add_argument("--out-dir", help="output directory (overrides the config)")
    parser.add_argument("--strict", action="store_true", help="treat warnings and degenerate results as errors")
    return parser


def load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.alpha is not None:
        cfg.alpha = args.alpha
    if args.bootstrap_n is not None:
        cfg.bootstrap.n = args.bootstrap_n
    if args.fix_size_to is not None:
        cfg.bootstrap.fix_size_to = args.fix_size_to
    if args.level:
        cfg.levels = list(args.level)
    if args.out_dir is not None:
        cfg.paths.out_dir = args.out_dir
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("STRATANET_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        ws = Workspace(cfg)
        if args.subcommand == "pipeline":
            results = run_pipeline(ws)
        else:
            results = [run_stage(ws, args.subcommand)]
    except InputError as exc:
        print(f"stratanet: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StratanetError as exc:
        print(f"stratanet: error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    for r in results:
        print(f"{r.stage}: {r.status}")
    statuses = {r.status for r in results}
    if "degenerate" in statuses and (args.strict or args.subcommand != "pipeline"):
        return EXIT_DEGENERATE
    if args.strict and "warning" in statuses:
        return EXIT_DEGENERATE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
