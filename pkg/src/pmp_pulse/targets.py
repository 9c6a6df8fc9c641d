"""Target manifolds and their fidelities with Wirtinger gradients.

Every target exposes `fidelity(finals)` and `fidelity_and_gradient(finals)`, where
`finals[k-1]` is the final state of TLS k. Gradients g_k are defined by
dF = sum_k Re <g_k | d psi_k>, which is what the adjoint propagation consumes.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidParameters
from .quantum import KET0, KET1, ket

N_SCAN = 256


def _per_tls_fidelity(overlaps):
    """((sum |c_k|)^2 + sum |c_k|^2) / (N (N + 1)): the free target phases chosen optimally."""
    mod = np.abs(overlaps)
    n = mod.size
    return float((mod.sum() ** 2 + (mod ** 2).sum()) / (n * (n + 1)))


def _per_tls_gradient(overlaps, targets):
    mod = np.abs(overlaps)
    n = mod.size
    total = mod.sum()
    grads = []
    for c, m, t in zip(overlaps, mod, targets):
        coeff = (2 * total + 2 * m) / (n * (n + 1))
        unit = np.exp(1j * np.angle(c)) if m > 0 else 0.0  # c / m overflows for subnormal m
        grads.append(coeff * unit * t)
    return grads


@dataclass(frozen=True)
class PerTlsTarget:
    """Each TLS k must end in kets[k-1], up to an arbitrary phase per TLS."""

    kets: tuple
    parametrization: str = "symmetric"

    def __post_init__(self):
        kets = tuple(np.asarray(k, dtype=complex) for k in self.kets)
        for k in kets:
            if k.shape != (2,) or not np.isclose(np.linalg.norm(k), 1.0, atol=1e-12):
                raise InvalidParameters("target kets must be normalized 2-vectors")
        object.__setattr__(self, "kets", kets)
        if self.parametrization not in ("symmetric", "asymmetric"):
            raise InvalidParameters(f"unknown parametrization {self.parametrization!r}")

    @property
    def n_tls(self):
        return len(self.kets)

    def _overlaps(self, finals):
        return np.array([np.vdot(t, np.asarray(f)) for t, f in zip(self.kets, finals)])

    def fidelity(self, finals):
        return _per_tls_fidelity(self._overlaps(finals))

    def fidelity_and_gradient(self, finals):
        c = self._overlaps(finals)
        return _per_tls_fidelity(c), _per_tls_gradient(c, self.kets)

    def to_dict(self):
        return {
            "type": "per_tls",
            "kets": [[[z.real, z.imag] for z in k] for k in self.kets],
            "parametrization": self.parametrization,
        }


class ExcitationTorus(PerTlsTarget):
    """All TLSs in |1>_k with free phases (a torus for N = 2)."""

    def __init__(self, n_tls=2):
        super().__init__(kets=tuple(KET1 for _ in range(n_tls)), parametrization="symmetric")

    def __repr__(self):
        return f"ExcitationTorus(n_tls={self.n_tls})"

    def to_dict(self):
        return {"type": "torus", "n_tls": self.n_tls}


@dataclass(frozen=True)
class PhaseLine:
    """psi_k(T) = exp(i (m_k theta + o_k)) |0>_k for some theta.

    Scored as the average gate fidelity of the diagonal gate the line encodes,
    with |0...0> as the untouched reference and C(N, k) computational states sharing
    TLS k; for m = (1, 2), o = (0, pi) that is a CZ gate up to single-qubit phases.
    """

    multipliers: tuple = (1, 2)
    offsets: tuple = (0.0, np.pi)
    parametrization: str = field(default="asymmetric")

    def __post_init__(self):
        if len(self.multipliers) != len(self.offsets):
            raise InvalidParameters("one multiplier and one offset per TLS")
        if any(int(m) != m for m in self.multipliers):
            raise InvalidParameters("multipliers must be integers")
        object.__setattr__(self, "multipliers", tuple(int(m) for m in self.multipliers))
        object.__setattr__(self, "offsets", tuple(float(o) for o in self.offsets))

    @property
    def n_tls(self):
        return len(self.multipliers)

    @property
    def weights(self):
        return np.array([comb(self.n_tls, k) for k in range(1, self.n_tls + 1)], dtype=float)

    @property
    def _norm(self):
        d = 2 ** self.n_tls
        return d * (d + 1)

    def _terms(self, finals):
        c = np.array([np.asarray(f)[0] for f in finals], dtype=complex)
        return c, self.weights, np.array(self.multipliers, dtype=float), np.array(self.offsets)

    def profile(self, finals, theta):
        """F along the line, for an array of theta values."""
        c, w, m, o = self._terms(finals)
        theta = np.asarray(theta, dtype=float)
        eta = np.multiply.outer(theta, m) + o
        s = 1 + (w * np.exp(-1j * eta) * c).sum(axis=-1)
        return (np.abs(s) ** 2 + 1 + (w * np.abs(c) ** 2).sum()) / self._norm

    def best_theta(self, finals):
        """Maximize F over theta: 256-point scan, then Newton on the analytic derivatives.

        Bounded Brent on the bracketing cell is the fallback when Newton leaves it.
        """
        grid = 2 * np.pi * np.arange(N_SCAN) / N_SCAN
        vals = self.profile(finals, grid)
        j = int(np.argmax(vals))
        h = 2 * np.pi / N_SCAN
        theta = self._newton(finals, float(grid[j]), bracket=(grid[j] - h, grid[j] + h))
        if theta is None:
            res = minimize_scalar(
                lambda t: -float(self.profile(finals, t)),
                bounds=(grid[j] - h, grid[j] + h),
                method="bounded",
                options={"xatol": 1e-10},
            )
            theta = float(res.x) if -res.fun >= vals[j] else float(grid[j])
            theta = self._newton(finals, theta, bracket=(grid[j] - h, grid[j] + h), strict=False)
        f = float(self.profile(finals, theta))
        if f < vals[j]:
            return float(grid[j]), float(vals[j])
        return theta, f

    def _newton(self, finals, theta, bracket, steps=20, strict=True):
        # theta must sit on the stationary point to rounding: the gradient below
        # drops the theta-variation term (envelope theorem)
        c, w, m, o = self._terms(finals)
        for _ in range(steps):
            e = w * np.exp(-1j * (m * theta + o)) * c
            s0, s1, s2 = 1 + e.sum(), (-1j * m * e).sum(), (-(m ** 2) * e).sum()
            d1 = 2 * np.real(np.conj(s0) * s1)
            d2 = 2 * (abs(s1) ** 2 + np.real(np.conj(s0) * s2))
            if not d2 < 0:
                return None if strict else theta
            step = -d1 / d2
            new = theta + step
            if not bracket[0] <= new <= bracket[1]:
                return None if strict else theta
            theta = new
            if abs(step) < 1e-15:
                break
        return theta

    def fidelity(self, finals):
        return self.best_theta(finals)[1]

    def fidelity_and_gradient(self, finals):
        theta, f = self.best_theta(finals)
        c, w, m, o = self._terms(finals)
        eta = m * theta + o
        s = 1 + (w * np.exp(-1j * eta) * c).sum()
        # theta is a stationary point, so its own variation does not contribute
        g0 = (2 * s * w * np.exp(1j * eta) + 2 * w * c) / self._norm
        return f, [g * KET0 for g in g0]

    def to_dict(self):
        return {"type": "phase_line", "multipliers": list(self.multipliers), "offsets": list(self.offsets)}


def _parse_ket(label):
    if isinstance(label, str):
        if label == "0":
            return KET0
        if label == "1":
            return KET1
        raise InvalidParameters(f"unknown ket label {label!r}")
    arr = np.asarray(label, dtype=float)
    if arr.shape != (2, 2):
        raise InvalidParameters("ket must be '0', '1' or [[re, im], [re, im]]")
    return ket(complex(*arr[0]), complex(*arr[1]))


def target_from_dict(d):
    kind = d.get("type")
    if kind == "torus":
        return ExcitationTorus(int(d.get("n_tls", 2)))
    if kind == "phase_line":
        return PhaseLine(tuple(d["multipliers"]), tuple(d["offsets"]))
    if kind == "per_tls":
        return PerTlsTarget(tuple(_parse_ket(k) for k in d["kets"]), d.get("parametrization", "symmetric"))
    raise InvalidParameters(f"unknown target type {kind!r}")


def fidelity_torus(psi1, psi2):
    return ExcitationTorus(2).fidelity([psi1, psi2])


def fidelity_phaseline(psi1, psi2, multipliers=(1, 2), offsets=(0.0, np.pi)):
    return PhaseLine(tuple(multipliers), tuple(offsets)).fidelity([psi1, psi2])


CZ_LINE = PhaseLine((1, 2), (0.0, np.pi))
