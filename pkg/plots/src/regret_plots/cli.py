"""Figure CLI: render regret curves from aggregate CSVs.

Either drive it from a JSON figure spec::

    plot --spec figure.json

or pass CSV paths positionally::

    plot a/aggregate.csv b/aggregate.csv --labels si_exp3 s_ucb \
        --kind policy --out figure.png
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from regret_plots.figure import FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plot", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("csvs", nargs="*", type=Path, help="aggregate.csv inputs, one curve each")
    parser.add_argument("--spec", type=Path, help="JSON figure spec (overrides positional arguments)")
    parser.add_argument("--labels", nargs="*", default=None, help="curve labels (default: parent dir names)")
    parser.add_argument("--kind", default="policy", help="regret_kind to plot (default: policy)")
    parser.add_argument("--comparator", default=None, help="comparator_id when a kind has several")
    parser.add_argument("--out", type=Path, default=Path("figure.png"), help="output PNG path")
    parser.add_argument("--log-x", action="store_true")
    parser.add_argument("--log-y", action="store_true")
    parser.add_argument("--title", default=None)
    return parser


def spec_from_args(args: argparse.Namespace) -> FigureSpec:
    if args.spec is not None:
        with open(args.spec) as fh:
            return FigureSpec.from_dict(json.load(fh))
    if not args.csvs:
        raise ValueError("pass aggregate CSV paths or --spec")
    labels = args.labels
    if labels is None:
        labels = [p.resolve().parent.name for p in args.csvs]
    if len(labels) != len(args.csvs):
        raise ValueError(f"{len(args.csvs)} inputs but {len(labels)} labels")
    return FigureSpec(
        inputs=[(str(p), label) for p, label in zip(args.csvs, labels)],
        regret_kind=args.kind,
        comparator_id=args.comparator,
        output=str(args.out),
        log_x=args.log_x,
        log_y=args.log_y,
        title=args.title,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = render(spec_from_args(args))
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
