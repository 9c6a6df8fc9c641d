"""Constant-detuning candidates for the CZ target and the infeasibility check for simultaneous excitation."""
import argparse

from pmp_pulse.abnormal import LOWER_BOUND, abnormal_case2_scan, case1_exact_infeasibility

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lmax", type=int, default=50)
    ap.add_argument("--nmax", type=int, default=200)
    a = ap.parse_args()
    cands = abnormal_case2_scan(a.lmax)
    print(f"{len(cands)} candidates, lower bound {LOWER_BOUND:.6f}")
    for c in cands[:10]:
        print(f"  l={c.l:3d} l'={c.l_prime:3d} T={c.T:10.6f} delta={c.delta:.6f} "
              f"phase residual={c.gate_residual:.3e} F={c.gate_fidelity:.6f}")
    print("any candidate implements the gate phase:", any(c.gate_phase_achieved for c in cands))
    rep = case1_exact_infeasibility(a.nmax)
    print(f"simultaneous excitation, n <= {a.nmax}: min residual {rep.min_residual:.3e}, "
          f"exactly nonzero everywhere: {rep.exact_nonzero}")
