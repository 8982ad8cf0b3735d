"""Command-line entry point: ``ghzdecay {characterize,decay,scaling,dfs} --config FILE``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import ConfigError, FitError
from .runner import run

log = logging.getLogger("ghzdecay")

COMMANDS = {
    "characterize": "ghz_characterize",
    "decay": "ghz_decay",
    "scaling": "scaling_study",
    "dfs": "dfs_contrast",
}

EXIT_OK, EXIT_CONFIG, EXIT_FIT = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghzdecay", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "characterize": "populations, coherence, fidelity and entanglement criteria of a GHZ state",
        "decay": "GHZ coherence versus waiting time",
        "scaling": "relative error probability versus qubit number",
        "dfs": "dephasing-free state versus GHZ state decay",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="YAML experiment configuration")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", help="output directory (overrides out_dir)")
        p.add_argument("--analytic", action="store_true", help="exact channel outputs, no sampling")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {"scenario": COMMANDS[args.command], "seed": args.seed, "out_dir": args.out}
    if args.analytic:
        overrides["analytic"] = True
    try:
        cfg = load_config(args.config, overrides)
        if args.seed is not None and args.seed >= 2**64:
            raise ConfigError({"seed": "must fit in 64 bits"})
        report = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FitError as exc:
        print(f"fit failure: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_FIT
    log.info("wrote %s/report.json", cfg.out_dir)
    if "alpha" in report:
        print(f"alpha = {report['alpha']:.4f} +/- {report['alpha_err']:.4f}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
