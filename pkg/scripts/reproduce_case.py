"""Synthesize, verify, run GRAPE against, and export one of the two built-in cases.

    python3 scripts/reproduce_case.py i --out out/case_i
"""
import argparse
import os
import sys

from pmp_pulse.cli import main


def run(args):
    code = main(args)
    if code:
        sys.exit(code)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("case", choices=["i", "ii"])
    ap.add_argument("--out", default=None)
    ap.add_argument("--gnuplot", action="store_true")
    a = ap.parse_args()
    out = a.out or os.path.join("out", f"case_{a.case}")
    extra = ["--gnuplot"] if a.gnuplot else []
    run(["synthesize", "--case", a.case, "--out", out, *extra])
    record = os.path.join(out, f"{a.case}_record.json")
    run(["verify", record])
    run(["compare", "--record", record, "--out", out, *extra])
    run(["bloch-export", "--record", record, "--out", out, *extra])
