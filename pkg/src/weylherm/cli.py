"""``weylherm <simulate|converge|hbar-sweep|periodicity> --config <path>``."""
import argparse
import json
import logging
import sys

from .config import ConfigError, describe_keys, parse_config
from .experiments import COMMANDS


def build_parser():
    parser = argparse.ArgumentParser(
        prog="weylherm",
        description="Hermite-Galerkin solver for the von Neumann equation in Weyl variables.",
        epilog="config keys:\n" + describe_keys(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "converge", "hbar-sweep", "periodicity"):
        p = sub.add_parser(
            name,
            help=f"run the {name} experiment",
            epilog="config keys:\n" + describe_keys(),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        p.add_argument("--config", required=True, help="path to a section.key = value config file")
        p.add_argument("--full-scale", action="store_true", help="use the full benchmark resolution")
        p.add_argument("--out", help="output directory (overrides output.directory)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    experiment = args.command.replace("-", "_")
    try:
        cfg = parse_config(args.config, experiment, full_scale=args.full_scale)
    except (ConfigError, OSError) as exc:
        print(f"weylherm: {args.config}: {exc}", file=sys.stderr)
        return 2
    artifacts = COMMANDS[experiment](cfg, out=args.out)
    print(json.dumps(artifacts.summary["results"], indent=2, sort_keys=True))
    print(f"summary: {artifacts.summary_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
