"""Command-line entry point for the scorer bridge."""

from __future__ import annotations

import argparse
import json
import sys

from .scorers import ScorerSet
from .server import serve


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hadas-scorer-bridge",
        description="Serve hallucination scores over stdin/stdout (hadas-scorer/1).",
    )
    group = parser.add_mutually_exclusive_group()
    group.add_argument(
        "--stub", action="store_true",
        help="deterministic text-statistic scorers; no model downloads",
    )
    group.add_argument(
        "--models", metavar="CONFIG",
        help="JSON file with sf_model/disc_model/cv_model checkpoints",
    )
    args = parser.parse_args(argv)

    if args.models:
        with open(args.models, "r", encoding="utf-8") as fh:
            scorers = ScorerSet.from_model_config(json.load(fh))
    else:
        scorers = ScorerSet.stub()
    serve(scorers, sys.stdin, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
