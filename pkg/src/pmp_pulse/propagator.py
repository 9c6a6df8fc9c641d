"""Time evolution of the effective two-level systems and of the full two-atom blockade model."""

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _kernels
from .quantum import KET0, bloch_vector, check_tls_index


@dataclass(frozen=True)
class PhasePulse:
    """Piecewise-constant laser phase with Omega = Omega_max = 1.

    `phi[j]` holds on the step (j*dt, (j+1)*dt]. An empty pulse is allowed and
    acts as the identity.
    """

    dt: float
    phi: np.ndarray = field(repr=False)

    def __post_init__(self):
        phi = np.ascontiguousarray(self.phi, dtype=float).reshape(-1)
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if not np.all(np.isfinite(phi)):
            raise ValueError("pulse phases must be finite")
        object.__setattr__(self, "phi", phi)

    @property
    def n_steps(self):
        return self.phi.shape[0]

    @property
    def duration(self):
        return self.dt * self.n_steps

    @property
    def edges(self):
        return self.dt * np.arange(self.n_steps + 1)

    @property
    def midpoints(self):
        return self.dt * (np.arange(self.n_steps) + 0.5)

    def shifted(self, offset):
        return PhasePulse(self.dt, self.phi + offset)

    def mirrored(self):
        """Time-reversed partner t -> T - t, phi -> 2*pi - phi."""
        return PhasePulse(self.dt, 2 * np.pi - self.phi[::-1])

    def sample(self, times):
        """Linear interpolation of the step-midpoint values at arbitrary times."""
        if self.n_steps == 1:
            return np.full(np.shape(times), self.phi[0])
        return np.interp(times, self.midpoints, self.phi)


@dataclass
class Trajectory:
    k: int
    times: np.ndarray
    states: np.ndarray  # (n+1, 2) complex

    @property
    def final(self):
        return self.states[-1]

    def norms(self):
        return np.linalg.norm(self.states, axis=1)

    def populations(self):
        return np.abs(self.states) ** 2

    def bloch(self):
        return bloch_vector(self.states)


def step_unitary(k, phi, dt):
    """Exact exp(-i H_k(phi) dt) for one step."""
    c = np.cos(0.5 * np.sqrt(k) * dt)
    s = np.sin(0.5 * np.sqrt(k) * dt)
    e = np.exp(1j * phi)
    return np.array([[c, -1j * s * e], [-1j * s * np.conj(e), c]])


def propagate_piecewise(pulse, k, psi0=KET0):
    k = check_tls_index(k)
    psi0 = np.asarray(psi0, dtype=np.complex128)
    states = _kernels.tls_trajectory(pulse.phi, pulse.dt, np.sqrt(k), psi0[0], psi0[1])
    return Trajectory(k=k, times=pulse.edges, states=states)


def propagate_final(pulse, k, psi0=KET0):
    """Final ket only; the fast path used inside optimizers."""
    psi0 = np.asarray(psi0, dtype=np.complex128)
    a0, a1 = _kernels.tls_final(pulse.phi, pulse.dt, np.sqrt(k), psi0[0], psi0[1])
    return np.array([a0, a1])


def constant_detuning_unitary(k, delta, T):
    """Closed form of exp(-i (delta |1><1| + sqrt(k)/2 sigma_x) T).

    delta |1><1| = delta/2 (I - sigma_z), hence the minus sign on sigma_z.
    """
    k = check_tls_index(k)
    w = np.sqrt(k + delta * delta)
    c = np.cos(0.5 * w * T)
    s = np.sin(0.5 * w * T)
    gen = np.array([[-delta, np.sqrt(k)], [np.sqrt(k), delta]]) / w
    return np.exp(-0.5j * delta * T) * (c * np.eye(2) - 1j * s * gen)


def propagate_constant_detuning(k, delta, T, psi0=KET0):
    if T < 0:
        raise ValueError("T must be non-negative")
    return constant_detuning_unitary(k, delta, T) @ np.asarray(psi0, dtype=np.complex128)


def propagate_detuned(deltas, dt, k, psi0=KET0):
    """Rotating-frame evolution under piecewise-constant detunings (one value per step)."""
    deltas = np.asarray(deltas, dtype=float)
    states = np.empty((deltas.size + 1, 2), dtype=np.complex128)
    states[0] = psi0
    for j, d in enumerate(deltas):
        states[j + 1] = constant_detuning_unitary(k, d, dt) @ states[j]
    return Trajectory(k=check_tls_index(k), times=dt * np.arange(deltas.size + 1), states=states)


def lab_from_rotating(psi_rot, phi_T):
    """Map a rotating-frame ket to the lab frame for the H_k(phi) convention.

    A lab pulse phi(t) corresponds to the rotating-frame detuning -dphi/dt; populations
    starting from |0> or |1> are identical for either sign.
    """
    return np.array([psi_rot[0], np.exp(-1j * phi_T) * psi_rot[1]])


# --- full two-atom blockade model -------------------------------------------------

BLOCKADE_BASIS = ("00", "01", "10", "11", "0r", "r0", "1r", "r1", "rr")
_IDX = {label: i for i, label in enumerate(BLOCKADE_BASIS)}
# (|1>-side state, |r>-side state) pairs driven by the laser; first letter is atom 1
_COUPLED = [("10", "r0"), ("11", "r1"), ("1r", "rr"), ("01", "0r"), ("11", "1r"), ("r1", "rr")]
_N_RYD = np.array([label.count("r") for label in BLOCKADE_BASIS], dtype=float)


def blockade_state(label):
    psi = np.zeros(9, dtype=np.complex128)
    psi[_IDX[label]] = 1.0
    return psi


def blockade_hamiltonian(phi, B):
    """(1/2) sum_j (e^{i phi} |1><r|_j + h.c.) + B |rr><rr| in the fixed 9-state basis."""
    h = np.zeros((9, 9), dtype=np.complex128)
    for lo, hi in _COUPLED:
        h[_IDX[lo], _IDX[hi]] = 0.5 * np.exp(1j * phi)
        h[_IDX[hi], _IDX[lo]] = 0.5 * np.exp(-1j * phi)
    h[_IDX["rr"], _IDX["rr"]] = B
    return h


def embed_effective(k, psi):
    """Embed an effective TLS ket into the 9-state space.

    k=1: |0>_1 = |01>, |1>_1 = |0r>;  k=2: |0>_2 = |11>, |1>_2 = (|1r> + |r1>)/sqrt(2).
    """
    out = np.zeros(9, dtype=np.complex128)
    if k == 1:
        out[_IDX["01"]] = psi[0]
        out[_IDX["0r"]] = psi[1]
    elif k == 2:
        out[_IDX["11"]] = psi[0]
        out[_IDX["1r"]] = psi[1] / np.sqrt(2)
        out[_IDX["r1"]] = psi[1] / np.sqrt(2)
    else:
        raise ValueError("the two-atom model only hosts k = 1 and k = 2")
    return out


def propagate_full_blockade(pulse, B, psi0, trajectory=False):
    """Exact step exponentials of the 9-level Hamiltonian.

    H(phi) = R H(0) R^dagger with R = exp(-i phi N_r), so one diagonalization serves
    every step.
    """
    if B < 0:
        raise ValueError("B must be non-negative")
    evals, evecs = scipy.linalg.eigh(blockade_hamiltonian(0.0, B))
    u0 = (evecs * np.exp(-1j * evals * pulse.dt)) @ evecs.conj().T
    psi = np.asarray(psi0, dtype=np.complex128).copy()
    states = [psi.copy()] if trajectory else None
    for p in pulse.phi:
        d = np.exp(-1j * p * _N_RYD)
        psi = d * (u0 @ (np.conj(d) * psi))
        if trajectory:
            states.append(psi)
    return np.array(states) if trajectory else psi


@dataclass
class BlockadeReport:
    B: float
    infidelity: dict  # k -> 1 - |<embedded effective|full>|^2
    double_excitation: float  # max over the pulse of the |rr> population

    @property
    def max_infidelity(self):
        return max(self.infidelity.values())


def blockade_reduction_error(pulse, B):
    """Compare the 9-level evolution of |01>, |11> with the effective k=1, k=2 TLS evolution."""
    infid = {}
    double = 0.0
    for k, label in ((1, "01"), (2, "11")):
        full = propagate_full_blockade(pulse, B, blockade_state(label), trajectory=True)
        eff = embed_effective(k, propagate_final(pulse, k))
        infid[k] = float(max(0.0, 1.0 - abs(np.vdot(eff, full[-1])) ** 2))
        double = max(double, float(np.max(np.abs(full[:, _IDX["rr"]]) ** 2)))
    return BlockadeReport(B=float(B), infidelity=infid, double_excitation=double)


# --- exports ----------------------------------------------------------------------

def write_trajectory_csv(path, traj, header=None):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "re_a0", "im_a0", "re_a1", "im_a1"])
        for t, (a0, a1) in zip(traj.times, traj.states):
            w.writerow([repr(float(t)), repr(a0.real), repr(a0.imag), repr(a1.real), repr(a1.imag)])


def write_bloch_csv(path, traj, header=None):
    xyz = traj.bloch()
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "y", "z"])
        for t, (x, y, z) in zip(traj.times, xyz):
            w.writerow([repr(float(t)), repr(float(x)), repr(float(y)), repr(float(z))])
