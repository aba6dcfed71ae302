"""Command-line interface.

Subcommands:
  map    run the full mapping pipeline on a dataset window
  synth  generate a synthetic textured-plane dataset
  eval   windowed planar-error evaluation with the kernel table

Each subcommand reads a flat key=value config (--config) and accepts
per-key overrides (--set key=value, repeatable). Logs go to stderr;
machine-readable output goes to files in the output directory only.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_pipeline_config, load_synth_config
from .dataset_io import ParseError
from .pipeline import EmptyWindowError, PipelineError, run_eval, run_pipeline, run_synth

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_EMPTY_WINDOW = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evfuse", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("map", "run the mapping pipeline"),
        ("synth", "generate a synthetic dataset"),
        ("eval", "windowed planar-error evaluation"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--out", help="output directory (overrides out_dir)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "map":
            run_pipeline(load_pipeline_config(args.config, args.overrides, args.out))
        elif args.command == "synth":
            run_synth(load_synth_config(args.config, args.overrides, args.out))
        else:
            run_eval(load_pipeline_config(args.config, args.overrides, args.out))
    except ConfigError as exc:
        print(f"evfuse: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyWindowError as exc:
        print(f"evfuse: {exc}", file=sys.stderr)
        return EXIT_EMPTY_WINDOW
    except (PipelineError, ParseError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"evfuse: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
