"""Abnormal extremals for N = 2: constant detuning, candidate enumeration, infeasibility witness.

With a constant detuning Delta, TLS k precesses about a fixed axis at the generalized
Rabi frequency sqrt(k + Delta^2). Both systems are back at |0>_k when
sqrt(1 + Delta^2) T = 2 pi l and sqrt(2 + Delta^2) T = 2 pi l', which gives
T = 2 pi sqrt(l'^2 - l^2) and Delta^2 = (2 l^2 - l'^2) / (l'^2 - l^2).
"""

import csv
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .propagator import PhasePulse, propagate_constant_detuning
from .quantum import KET0
from .targets import CZ_LINE

LOWER_BOUND = 2 * np.sqrt(3) * np.pi


@dataclass(frozen=True)
class AbnormalCandidate:
    l: int
    l_prime: int
    delta: float
    T: float
    closure: float  # min over k of |<0|psi_k(T)>|
    gate_residual: float  # |wrap(gamma_2 - 2 gamma_1 - pi)| minimized over the sign of Delta
    gate_fidelity: float

    @property
    def gate_phase_achieved(self):
        return self.gate_residual < 1e-6


def candidate_parameters(l, l_prime):
    if not (1 <= l < l_prime and l_prime * l_prime <= 2 * l * l):
        raise ValueError(f"(l, l') = ({l}, {l_prime}) violates l < l' <= sqrt(2) l")
    gap = l_prime * l_prime - l * l
    return float(np.sqrt((2 * l * l - l_prime * l_prime) / gap)), float(2 * np.pi * np.sqrt(gap))


def _evaluate(l, l_prime):
    delta, T = candidate_parameters(l, l_prime)
    closure, residual, fid = 1.0, np.inf, 0.0
    for d in (delta, -delta):
        finals = [propagate_constant_detuning(k, d, T, KET0) for k in (1, 2)]
        closure = min(closure, *(abs(f[0]) for f in finals))
        g1, g2 = np.angle(finals[0][0]), np.angle(finals[1][0])
        residual = min(residual, abs(np.angle(np.exp(1j * (g2 - 2 * g1 - np.pi)))))
        fid = max(fid, CZ_LINE.fidelity(finals))
    return AbnormalCandidate(l, l_prime, delta, T, float(closure), float(residual), float(fid))


def abnormal_case2_scan(l_max):
    """All (l, l') with 1 <= l < l' <= min(sqrt(2) l, l_max), checked by propagation, sorted by T."""
    if l_max < 2:
        raise ValueError("l_max must be at least 2")
    out = []
    for lp in range(2, l_max + 1):
        for l in range(1, lp):
            if lp * lp <= 2 * l * l:
                out.append(_evaluate(l, lp))
    return sorted(out, key=lambda c: (c.T, c.l))


def write_candidates_csv(path, candidates, header=None):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["l", "l_prime", "delta", "T", "gate_phase_achieved"])
        for c in candidates:
            w.writerow([c.l, c.l_prime, repr(c.delta), repr(c.T), int(c.gate_phase_achieved)])


@dataclass
class InfeasibilityReport:
    n: np.ndarray
    residuals: np.ndarray  # distance of ratio * x_n to pi/2 + pi Z
    exact_nonzero: bool  # certified with exact arithmetic, not from the float residuals

    @property
    def min_residual(self):
        return float(self.residuals.min())

    @property
    def running_min(self):
        return np.minimum.accumulate(self.residuals)


def case1_exact_infeasibility(n_max, ratio=None):
    """Witness that x_n = pi/2 + pi n never also puts ratio * x_n on pi/2 + pi Z.

    With m = 2n + 1 the residual is (pi/2) * dist(ratio * m, odd integers). For the
    default ratio sqrt(2) exactness is certified in integers: sqrt(2) m = j would
    need 2 m^2 = j^2, which is checked for the nearest odd j. A rational ratio
    (Fraction) is handled exactly and can give a zero residual.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    n = np.arange(n_max + 1, dtype=np.int64)
    m = 2 * n + 1
    if ratio is None:
        x = np.sqrt(2.0) * m
        j = 2 * np.floor(x / 2) + 1  # nearest odd integer
        resid = 0.5 * np.pi * np.abs(x - j)
        ji = j.astype(np.int64)
        exact = bool(np.all(2 * m * m != ji * ji))
        return InfeasibilityReport(n, resid, exact)
    r = Fraction(ratio)
    resid = np.empty(n.size)
    exact = True
    for i, mi in enumerate(m.tolist()):
        x = r * mi
        j = 2 * ((x - 1) / 2).__round__() + 1
        d = abs(x - j)
        exact = exact and d != 0
        resid[i] = 0.5 * np.pi * float(d)
    return InfeasibilityReport(n, resid, exact)


def constant_detuning_pulse(a_over_b, c, T, dt=1e-3):
    """phi(t) = a_over_b * t + c sampled at step midpoints; the rotating-frame detuning is -a_over_b."""
    if not T > 0:
        raise ValueError("T must be positive")
    n = max(1, int(np.ceil(T / dt - 1e-9)))
    h = T / n
    return PhasePulse(h, a_over_b * h * (np.arange(n) + 0.5) + c)
