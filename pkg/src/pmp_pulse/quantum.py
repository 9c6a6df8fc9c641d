"""Two-level algebra for the effective blockade systems.

Units: Omega_max = 1, so times are in 1/Omega_max and detunings in Omega_max.
Kets are numpy complex128 arrays of shape (2,), amplitudes on (|0>_k, |1>_k).
"""

import numpy as np

IDENTITY = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PROJ_1 = np.array([[0, 0], [0, 1]], dtype=np.complex128)

PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

KET0 = np.array([1, 0], dtype=np.complex128)
KET1 = np.array([0, 1], dtype=np.complex128)


def ket(a0, a1=0.0):
    """Build a ket from its two amplitudes; raises on non-finite input."""
    psi = np.array([a0, a1], dtype=np.complex128)
    if not np.all(np.isfinite(psi)):
        raise ValueError("ket amplitudes must be finite")
    return psi


def check_tls_index(k):
    if int(k) != k or k < 1:
        raise ValueError(f"TLS index must be a positive integer, got {k!r}")
    return int(k)


def hamiltonian_phase(k, phi):
    """H_k = (sqrt(k)/2)(cos(phi) sigma_x - sin(phi) sigma_y), Omega pinned at 1."""
    k = check_tls_index(k)
    half = 0.5 * np.sqrt(k)
    h = np.zeros((2, 2), dtype=np.complex128)
    h[0, 1] = half * np.exp(1j * phi)
    h[1, 0] = half * np.exp(-1j * phi)
    return h


def hamiltonian_detuned(k, delta):
    """Rotating-frame form delta |1><1| + (sqrt(k)/2) sigma_x."""
    k = check_tls_index(k)
    return delta * PROJ_1 + 0.5 * np.sqrt(k) * SIGMA_X


def pauli(mu):
    try:
        return PAULI[mu]
    except KeyError:
        raise ValueError(f"axis must be one of x, y, z; got {mu!r}") from None


def imag_sandwich(chi, mu, psi):
    """Im <chi| sigma_mu |psi>. Inputs need not be normalized."""
    return float(np.imag(np.vdot(chi, pauli(mu) @ psi)))


def bloch_vector(psi):
    """(x, y, z) with x = 2 Re(a0* a1), y = 2 Im(a0* a1), z = |a0|^2 - |a1|^2.

    Accepts a single ket or an array of kets with trailing dimension 2.
    """
    psi = np.asarray(psi)
    a0 = psi[..., 0]
    a1 = psi[..., 1]
    c = np.conj(a0) * a1
    return np.stack([2 * c.real, 2 * c.imag, np.abs(a0) ** 2 - np.abs(a1) ** 2], axis=-1)


def overlap_modulus(a, b):
    return float(abs(np.vdot(a, b)))
