"""Command line: ``freqbin <pipeline> --config FILE [--seed N] [--out DIR] [--preset NAME]``.

Exit status 0 on success, 1 for configuration errors, 2 for runtime errors.
Errors are reported on stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings

from .config import PIPELINES, parse_config
from .errors import ConfigError
from .presets import preset_names

log = logging.getLogger("freqbin")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freqbin", description="Frequency-bin biphoton simulations.")
    p.add_argument("pipeline", choices=PIPELINES)
    p.add_argument("--config", help="configuration file (omit to use presets only)")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    p.add_argument("--out", default=None, help="output directory (overrides the config)")
    p.add_argument("--preset", action="append", default=[], help="preset name, repeatable; see --list-presets")
    p.add_argument("--list-presets", action="store_true", help="print preset names and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _error(kind, exc, status, line=None):
    rec = {"status": "error", "error_type": kind, "message": str(exc)}
    if line is not None:
        rec["line"] = line
    print(json.dumps(rec), file=sys.stderr)
    return status


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    if "--list-presets" in argv:
        print("\n".join(preset_names()))
        return 0
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text = ""
        if args.config:
            with open(args.config) as fh:
                text = fh.read()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cfg = parse_config(text, pipeline=args.pipeline, presets=args.preset, seed=args.seed, out=args.out)
        for w in caught:
            log.warning("%s", w.message)
    except ConfigError as exc:
        return _error("ConfigError", exc, 1, exc.line)
    except OSError as exc:
        return _error("ConfigError", exc, 1)

    from .pipelines import run_pipeline

    try:
        status, record = run_pipeline(cfg)
    except Exception as exc:  # anything unexpected is still a runtime failure
        return _error(type(exc).__name__, exc, 2)
    if status != 0:
        print(json.dumps(record), file=sys.stderr)
        return status
    log.info("wrote %d files to %s", len(record["outputs"]), cfg.out)
    print(json.dumps({"status": "ok", "out": cfg.out, "metrics": record["metrics"]}, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
