"""`declaw-plots render --spec fig.json`: one figure per invocation."""

from __future__ import annotations

import argparse
import json
import sys

import matplotlib.pyplot as plt

from .io import PlotsError
from .render import render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="declaw-plots",
                                     description="Render declaw CSV artifacts to figures.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render")
    p.add_argument("--spec", required=True, help="figure spec (JSON)")
    args = parser.parse_args(argv)

    try:
        with open(args.spec) as fh:
            spec = json.load(fh)
    except FileNotFoundError:
        print(f"error: spec file not found: {args.spec}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: spec is not valid JSON: {exc}", file=sys.stderr)
        return 2

    try:
        fig, output = render(spec)
        plt.close(fig)
    except PlotsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal fault: {exc}", file=sys.stderr)
        return 3
    print(output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
