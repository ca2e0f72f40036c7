"""Write the CSV behind every standard figure into an output directory.

    python scripts/reproduce_figures.py out/ --jobs 4

Each dataset goes through the CLI entry point, so every CSV gets its
``.meta.json`` sidecar and can be regenerated with ``cvgn figure --config``.
"""

import argparse
import sys
import time
from pathlib import Path

from cvgn.analysis import FIGURES
from cvgn.cli import run


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("outdir", type=Path)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--log-base", choices=["2", "e"], default="2")
    parser.add_argument("--only", nargs="*", choices=FIGURES, help="subset of figures (default: all)")
    args = parser.parse_args(argv)

    args.outdir.mkdir(parents=True, exist_ok=True)
    status = 0
    for fig in args.only or FIGURES:
        t0 = time.perf_counter()
        out = args.outdir / f"{fig}.csv"
        code = run(["figure", fig, "-o", str(out), "--jobs", str(args.jobs), "--log-base", args.log_base])
        print(f"{fig:6s} exit {code} {time.perf_counter() - t0:6.1f} s -> {out}")
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
