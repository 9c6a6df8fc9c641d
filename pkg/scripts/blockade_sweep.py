"""How well the two effective TLSs describe the full two-atom model as the blockade grows."""
import argparse

import numpy as np

from pmp_pulse.cases import CASES
from pmp_pulse.optimize import make_record
from pmp_pulse.propagator import blockade_reduction_error

OPTIMUM_I = (1.2634334133040823, -1.17361572779121)

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--B", type=float, nargs="+", default=[10, 50, 100, 500, 1000, 5000])
    a = ap.parse_args()
    pulse = make_record(CASES["i"].target, OPTIMUM_I, crossings=2).pulse
    print(f"{'B':>8} {'1-F (k=1)':>12} {'1-F (k=2)':>12} {'max P(rr)':>12}")
    for B in a.B:
        rep = blockade_reduction_error(pulse, B)
        print(f"{B:8g} {rep.infidelity[1]:12.3e} {rep.infidelity[2]:12.3e} {rep.double_excitation:12.3e}")
    print("B^2 * (1-F, k=2) should level off:",
          [f"{B * B * blockade_reduction_error(pulse, B).infidelity[2]:.3g}" for B in a.B[-2:]])
