import argparse
import sys

from .render import SchemaError, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plotmap",
        description="Render a confidence-vs-variability data map from a "
        "cartography CSV.",
    )
    parser.add_argument("csv", help="input cartography CSV")
    parser.add_argument("-o", "--out", required=True, help="output image path")
    parser.add_argument(
        "--bins", type=int, default=5, help="correctness legend bins (>= 2)"
    )
    parser.add_argument("--title", help="figure title")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.bins < 2:
        build_parser().error(f"--bins must be >= 2, got {args.bins}")
    try:
        meta = render(args.csv, args.out, bins=args.bins, title=args.title)
    except SchemaError as exc:
        print(f"plotmap: schema error in column '{exc.column}': {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"plotmap: {exc}", file=sys.stderr)
        return 1
    if meta["point_count"] == 0:
        print("plotmap: warning: no data rows, wrote empty plot", file=sys.stderr)
    print(f"wrote {args.out} ({meta['point_count']} points, {meta['bins']} bins)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
