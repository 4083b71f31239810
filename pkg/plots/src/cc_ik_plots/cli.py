"""Command line entry point: one figure per invocation."""
import argparse
import os
import sys

from .figures import KINDS, FigureJob, SchemaError, render

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cc-ik-plots",
        description="render figures from cc-ik output files")
    parser.add_argument("--input", required=True,
                        help="trajectory.json, workspace.csv or summary.json")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--stride", type=int, default=6,
                        help="iterations between trajectory snapshots")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = FigureJob(kind=args.kind, input=args.input, out=args.out,
                        stride=args.stride)
        if not os.path.exists(job.input):
            raise FileNotFoundError(job.input)
        render(job)
    except (SchemaError, ValueError) as exc:
        print(f"cc-ik-plots: invalid input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except FileNotFoundError as exc:
        print(f"cc-ik-plots: file not found: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"cc-ik-plots: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
