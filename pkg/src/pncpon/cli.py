"""Command-line entry point: ``pncpon <experiment> --config FILE --out DIR``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config as config_mod
from .experiments import RUNNERS, CalibrationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ANCHOR = 3
EXIT_BRACKET = 4

log = logging.getLogger("pncpon")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pncpon", description=__doc__)
    p.add_argument("experiment", choices=config_mod.EXPERIMENTS)
    p.add_argument("--config", type=Path, default=None,
                   help="key = value overrides of the packaged defaults")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--seed", type=int, default=None, help="overrides [run] seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.workers < 1:
        log.error("--workers must be >= 1")
        return EXIT_CONFIG
    try:
        cfg = config_mod.load(args.experiment, args.config, args.seed)
    except config_mod.ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG

    args.out.mkdir(parents=True, exist_ok=True)
    runner = RUNNERS[args.experiment]
    if args.experiment == "calibrate":
        try:
            result = runner(cfg, args.workers)
        except CalibrationError as exc:
            log.error("calibration failed on anchor %s", exc)
            return EXIT_ANCHOR
        (args.out / "defaults.ini").write_text(result.defaults_text)
        (args.out / "calibrate.csv").write_text(result.report.to_csv(result.config))
        sys.stdout.write(result.report.to_csv(result.config))
        if result.failed:
            log.error("anchors out of tolerance: %s", ", ".join(result.failed))
            return EXIT_ANCHOR
        return EXIT_OK

    table = runner(cfg, args.workers)
    out = args.out / f"{args.experiment}.csv"
    out.write_text(table.to_csv(cfg))
    log.info("wrote %s", out)
    if table.bracket_failures:
        log.error("%d sweep point(s) could not bracket the target BER", table.bracket_failures)
        return EXIT_BRACKET
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
