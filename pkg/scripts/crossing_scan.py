"""Minimal duration per number of detuning zero crossings (slow: several minutes per case)."""
import argparse

from pmp_pulse.cases import CASES
from pmp_pulse.optimize import scan_crossings

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("case", choices=sorted(CASES))
    ap.add_argument("--max-crossings", type=int, default=6)
    a = ap.parse_args()
    per_count, best = scan_crossings(CASES[a.case].target, range(1, a.max_crossings + 1), signs=(1,))
    for n in range(1, a.max_crossings + 1):
        rec = per_count.get(n)
        print(n, "no pulse with F >= 0.999" if rec is None else f"T={rec.T:.6f} F={rec.fidelity:.9f}")
    if best is not None:
        print(f"shortest: crossings={best.crossings} T={best.T:.6f}")
