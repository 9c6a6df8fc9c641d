"""Normal extremals for two Rydberg-blockaded TLSs.

The optimal detuning moves like a classical particle in a quartic potential,
1/2 dDelta^2 + V(Delta) = 0. This module builds V from its parametrizations or
from the conserved quantities (C, r1, r2), shoots the detuning from Delta(0) = 0,
integrates it into a phase, and rebuilds the costate vectors
v_k = Im <chi_k| sigma |psi_k> to check every necessary condition.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicHermiteSpline

from . import _kernels
from .errors import (
    EnergyDrift,
    InconsistentInitialData,
    InconsistentInvariants,
    InvalidParameters,
    NoCrossing,
    NoRealSolution,
    RecordError,
)
from .propagator import PhasePulse

SQRT2 = np.sqrt(2.0)

TOLERANCES = {
    "energy": 1e-6,
    "radii": 1e-6,
    "C": 1e-6,
    "four": 1e-5,
    "ode": 1e-3,
    "detuning": 1e-6,
    "boundary": 1e-8,
}


@dataclass(frozen=True)
class QuarticPotential:
    c0: float
    c1: float
    c2: float
    c3: float = 0.0
    c4: float = 0.125

    def __post_init__(self):
        if self.c4 != 0.125 or self.c3 != 0.0:
            raise InvalidParameters(f"need c4 = 1/8 and c3 = 0, got c4={self.c4}, c3={self.c3}")

    def __call__(self, delta):
        d = np.asarray(delta, dtype=float)
        return (((self.c4 * d + self.c3) * d + self.c2) * d + self.c1) * d + self.c0

    def derivative(self, delta):
        d = np.asarray(delta, dtype=float)
        return ((4 * self.c4 * d + 3 * self.c3) * d + 2 * self.c2) * d + self.c1

    def real_roots(self):
        r = np.roots([self.c4, self.c3, self.c2, self.c1, self.c0])
        return np.sort(r[np.abs(r.imag) < 1e-9].real)

    def as_dict(self):
        return {"c0": self.c0, "c1": self.c1, "c2": self.c2, "c3": self.c3, "c4": self.c4}


@dataclass(frozen=True)
class InvariantTriple:
    C: float
    r1: float
    r2: float

    def __post_init__(self):
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError("radii must be non-negative")

    def as_dict(self):
        return {"C": self.C, "r1": self.r1, "r2": self.r2}


def potential_from_sym(delta0, v0):
    """V = (D^2 - delta0^2)(D^2/8 - v0/delta0^2): roots +-delta0, V(0) = v0."""
    if not delta0 > 0:
        raise InvalidParameters(f"delta0 must be positive, got {delta0}")
    if not v0 < 0:
        raise InvalidParameters(f"V0 must be negative, got {v0}")
    d2 = delta0 * delta0
    return QuarticPotential(c0=float(v0), c1=0.0, c2=float(-v0 / d2 - d2 / 8.0))


def potential_from_asym(delta_plus, delta_minus, v0):
    """V = (D - d+)(D - d-)(D^2/8 + (d+ + d-) D/8 + v0/(d+ d-))."""
    if not (delta_plus > 0 > delta_minus):
        raise InvalidParameters(f"need delta_plus > 0 > delta_minus, got {delta_plus}, {delta_minus}")
    if not v0 < 0:
        raise InvalidParameters(f"V0 must be negative, got {v0}")
    s = delta_plus + delta_minus
    p = delta_plus * delta_minus
    q = v0 / p
    return QuarticPotential(c0=float(p * q), c1=float(p * s / 8.0 - s * q), c2=float(q + p / 8.0 - s * s / 8.0))


def potential_coeffs(inv):
    C, r1s, r2s = inv.C, inv.r1 ** 2, inv.r2 ** 2
    c2 = (-2 * C * C + r1s - 2 * r2s + 12) / 16
    c0 = ((6 * C * C - r1s - 2 * r2s + 4) ** 2 - 8 * (4 * C * C - r1s) * (C * C - r2s)) / 128
    return QuarticPotential(c0=float(c0), c1=float(-C), c2=float(c2))


def recover_invariants(pot, tol=1e-9):
    """Invert the (C, r1, r2) -> (c0, c1, c2) map.

    With C fixed by c1, the c2 relation is linear in r1^2 and the quadratic terms of
    the c0 relation cancel, so (r1^2, r2^2) is unique.
    """
    C = 0.0 - pot.c1
    a = 16 * pot.c2 + 2 * C * C - 12  # r1^2 - 2 r2^2
    b = 6 * C * C - a + 4
    d = 4 * C * C - a
    r2s = (b * b - 8 * d * C * C - 128 * pot.c0) / 32
    r1s = a + 2 * r2s
    if r1s < -tol or r2s < -tol:
        raise NoRealSolution(f"no real radii: r1^2={r1s:.6g}, r2^2={r2s:.6g}")
    inv = InvariantTriple(C=float(C), r1=float(np.sqrt(max(r1s, 0.0))), r2=float(np.sqrt(max(r2s, 0.0))))
    back = potential_coeffs(inv)
    resid = max(abs(back.c2 - pot.c2), abs(back.c0 - pot.c0)) / max(1.0, abs(pot.c0), abs(pot.c2))
    if resid > tol:
        raise NoRealSolution(f"round-trip residual {resid:.3g} exceeds {tol}")
    return inv


@dataclass
class DetuningCurve:
    dt: float
    delta: np.ndarray = field(repr=False)
    ddelta: np.ndarray = field(repr=False)
    T: float
    potential: QuarticPotential = None
    crossings: int = None
    sign: int = 1

    @property
    def times(self):
        return self.dt * np.arange(self.delta.size)

    def energy_residual(self, potential=None):
        pot = potential or self.potential
        return float(np.max(np.abs(0.5 * self.ddelta ** 2 + pot(self.delta))))


def integrate_detuning(pot, crossings, sign=1, dt=1e-3, t_max=100.0, energy_tol=TOLERANCES["energy"]):
    """Shoot Delta'' = -V'(Delta) from Delta(0) = 0, Delta'(0) = sign*sqrt(-2 V(0)).

    The end time is the `crossings`-th zero of Delta for t > 0, located by bisection on
    the RK4 sub-step. The curve is then re-integrated on the uniform grid
    T/ceil(T/dt) so that it ends exactly on that zero.
    """
    if int(crossings) != crossings or crossings < 1:
        raise ValueError("crossings must be a positive integer")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    v_zero = float(pot(0.0))
    if not v_zero < 0:
        raise InvalidParameters(f"V(0) = {v_zero} must be negative")
    v0 = sign * np.sqrt(-2.0 * v_zero)
    T = _kernels.shoot_crossing(pot.c4, pot.c3, pot.c2, pot.c1, v0, dt, int(crossings), t_max, 1e-10)
    if T < 0:
        raise NoCrossing(f"fewer than {crossings} zero crossings before t = {t_max}")
    n = max(1, int(np.ceil(T / dt - 1e-9)))
    h = T / n
    delta, ddelta = _kernels.rk4_uniform(pot.c4, pot.c3, pot.c2, pot.c1, v0, h, n)
    curve = DetuningCurve(dt=h, delta=delta, ddelta=ddelta, T=float(T), potential=pot, crossings=int(crossings), sign=sign)
    with np.errstate(over="ignore", invalid="ignore"):
        drift = curve.energy_residual()
    if not drift <= energy_tol:  # also rejects a blown-up (nan) integration
        raise EnergyDrift(f"energy residual {drift:.3g} > {energy_tol}; reduce dt")
    return curve


def turning_points(curve):
    """Times and values of the interior extrema of Delta(t), from the cubic Hermite interpolant."""
    spline = CubicHermiteSpline(curve.times, curve.delta, curve.ddelta)
    t = spline.derivative().roots(extrapolate=False)
    t = t[(t > 0) & (t < curve.T)]
    t = np.unique(np.round(t, 12))
    return t, spline(t)


def phase_nodes(curve, phi0=0.0):
    """phi(t) = phi0 + int_0^t Delta, trapezoidal on the curve grid (values at grid nodes)."""
    return phi0 + cumulative_trapezoid(curve.delta, dx=curve.dt, initial=0.0)


def phase_from_detuning(curve, phi0=0.0):
    """Piecewise-constant pulse; each step carries the mean of its two node phases.

    phi0 is a gauge: shifting it conjugates every H_k by a z-rotation, which leaves
    |0>_k invariant and changes only the phase of the |1>_k amplitudes, and no target
    manifold constrains that phase. It is fixed to 0 by default.
    """
    nodes = phase_nodes(curve, phi0)
    return PhasePulse(curve.dt, 0.5 * (nodes[1:] + nodes[:-1]))


@dataclass
class PMPVectors:
    times: np.ndarray
    vectors: np.ndarray  # (n_times, N, 3)

    @property
    def n_tls(self):
        return self.vectors.shape[1]

    @property
    def v1(self):
        return self.vectors[:, 0]

    @property
    def v2(self):
        return self.vectors[:, 1]

    def _sqrtk(self):
        return np.sqrt(np.arange(1, self.n_tls + 1))

    def radii(self):
        return np.linalg.norm(self.vectors, axis=2)

    def z_sum(self):
        return self.vectors[:, :, 2].sum(axis=1)

    def constraint4(self):
        sk = self._sqrtk()
        sx = (sk * self.vectors[:, :, 0]).sum(axis=1)
        sy = (sk * self.vectors[:, :, 1]).sum(axis=1)
        return sx * sx + sy * sy

    def detuning(self):
        k = np.arange(1, self.n_tls + 1)
        return 0.5 * (k * self.vectors[:, :, 2]).sum(axis=1)


def reconstruct_vectors(curve, inv, phi0=0.0, clamp=1e-9):
    """Rebuild v_1, v_2 along a detuning curve for N = 2.

    z1 = 2C - 2 Delta and z2 = 2 Delta - C follow from C = z1 + z2 and
    Delta = (z1 + 2 z2)/2. The transverse radii are sqrt(r_k^2 - z_k^2); their relative
    angle comes from the "=4" constraint (cosine) and from dz1/dt (sine), and the
    absolute angle from cos(phi) = (v1x + sqrt2 v2x)/2, sin(phi) = -(v1y + sqrt2 v2y)/2.
    """
    d = curve.delta
    z1 = 2 * inv.C - 2 * d
    z2 = 2 * d - inv.C
    rho_sq = []
    for r, z in ((inv.r1, z1), (inv.r2, z2)):
        rs = r * r - z * z
        if np.min(rs) < -clamp:
            raise InconsistentInvariants(f"r^2 - z^2 reaches {np.min(rs):.3g} < 0")
        rho_sq.append(np.maximum(rs, 0.0))
    rho1, rho2 = np.sqrt(rho_sq[0]), np.sqrt(rho_sq[1])
    den = np.sqrt(8.0) * rho1 * rho2
    safe = np.where(den > 0, den, 1.0)
    cos_d = np.where(den > 0, (4 - rho_sq[0] - 2 * rho_sq[1]) / safe, 1.0)
    sin_d = np.where(den > 0, 4 * (-2 * curve.ddelta) / safe, 0.0)
    if np.max(np.abs(cos_d)) > 1 + 1e-6:
        raise InconsistentInvariants(f"|cos(xi1 - xi2)| reaches {np.max(np.abs(cos_d)):.6g}")
    rel = np.arctan2(sin_d, cos_d)
    phi = phase_nodes(curve, phi0)
    xi2 = -phi - np.angle(rho1 * np.exp(1j * rel) + SQRT2 * rho2)
    xi1 = xi2 + rel
    v = np.empty((d.size, 2, 3))
    v[:, 0] = np.stack([rho1 * np.cos(xi1), rho1 * np.sin(xi1), z1], axis=1)
    v[:, 1] = np.stack([rho2 * np.cos(xi2), rho2 * np.sin(xi2), z2], axis=1)
    return PMPVectors(times=curve.times, vectors=v)


def _rotation_rhs(phi, v, sqrtk):
    n = np.array([np.cos(phi), -np.sin(phi), 0.0])
    return sqrtk[:, None] * np.cross(n, v)


@dataclass
class VerificationReport:
    residuals: dict
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))

    @property
    def failures(self):
        return [k for k, v in self.residuals.items() if not (v <= self.tolerances[k])]

    @property
    def passed(self):
        return not self.failures

    def table(self):
        lines = [f"{'check':<10} {'residual':>12} {'tolerance':>10}  status"]
        for k, v in self.residuals.items():
            ok = "pass" if v <= self.tolerances[k] else "FAIL"
            lines.append(f"{k:<10} {v:>12.3e} {self.tolerances[k]:>10.1e}  {ok}")
        return "\n".join(lines)


def verify_pmp(record):
    """Residuals of every PMP relation along a normal extremal (N = 2).

    `record` needs `curve`, `pulse`, `potential`, `invariants` (or None) and `phi0`.
    """
    if getattr(record, "potential", None) is None:
        raise RecordError("record carries no quartic potential (abnormal or incomplete)", path="potential")
    curve, pulse = record.curve, record.pulse
    if curve is None:
        raise RecordError("record carries no detuning curve", path="delta")
    if pulse.n_steps != curve.delta.size - 1 or not np.isclose(pulse.dt, curve.dt, rtol=1e-12, atol=0):
        raise RecordError("pulse and detuning curve do not share a grid", path="phi")
    inv = record.invariants or recover_invariants(record.potential)
    pot = record.potential
    res = {
        "energy": float(np.max(np.abs(0.5 * curve.ddelta ** 2 + pot(curve.delta)))),
        "boundary": float(max(abs(curve.delta[0]), abs(curve.delta[-1]))),
    }
    try:
        vec = reconstruct_vectors(curve, inv, phi0=record.phi0)
    except InconsistentInvariants:
        for name in ("radii", "C", "four", "ode", "detuning"):
            res[name] = float("inf")
        return VerificationReport(res)
    res["radii"] = float(np.max(np.abs(vec.radii() - np.array([inv.r1, inv.r2]))))
    res["C"] = float(np.max(np.abs(vec.z_sum() - inv.C)))
    res["four"] = float(np.max(np.abs(vec.constraint4() - 4.0)))
    sqrtk = np.array([1.0, SQRT2])
    v = vec.vectors
    fd = (v[1:] - v[:-1]) / curve.dt
    vm = 0.5 * (v[1:] + v[:-1])
    n = np.stack([np.cos(pulse.phi), -np.sin(pulse.phi), np.zeros_like(pulse.phi)], axis=1)
    rhs = sqrtk[None, :, None] * np.cross(n[:, None, :], vm)
    res["ode"] = float(np.max(np.abs(fd - rhs)))
    res["detuning"] = float(np.max(np.abs(curve.delta - vec.detuning())))
    return VerificationReport(res)


@dataclass
class CostateRun:
    vectors: PMPVectors
    max_four_violation: float
    max_radius_drift: float
    max_C_drift: float


def _drifts(vec):
    r = vec.radii()
    z = vec.z_sum()
    return (
        float(np.max(np.abs(vec.constraint4() - 4.0))),
        float(np.max(np.abs(r - r[0]))),
        float(np.max(np.abs(z - z[0]))),
    )


def check_initial_data(v_init, phi0, tol=1e-6):
    v = np.asarray(v_init, dtype=float)
    sk = np.sqrt(np.arange(1, v.shape[0] + 1))
    sx = float((sk * v[:, 0]).sum())
    sy = float((sk * v[:, 1]).sum())
    if abs(sx * sx + sy * sy - 4.0) > tol:
        raise InconsistentInitialData(f"'=4' constraint violated at t=0: {sx * sx + sy * sy:.9g}")
    if phi0 is not None and (abs(np.cos(phi0) - 0.5 * sx) > tol or abs(np.sin(phi0) + 0.5 * sy) > tol):
        raise InconsistentInitialData("initial vectors do not reproduce the control phase at t=0")


def costate_ode_general(n_tls, pulse, v_init, phi0=None, tol=1e-6):
    """Drive the N vectors v_k with a given pulse: dv_k/dt = sqrt(k) (cos phi, -sin phi, 0) x v_k.

    Each piecewise-constant step is an exact rotation about that axis by sqrt(k) dt.
    `phi0` is the control phase at t = 0 used for the consistency precondition.
    """
    v = np.array(v_init, dtype=float).reshape(n_tls, 3)
    check_initial_data(v, phi0, tol)
    sqrtk = np.sqrt(np.arange(1, n_tls + 1))
    out = np.empty((pulse.n_steps + 1, n_tls, 3))
    out[0] = v
    cth = np.cos(sqrtk * pulse.dt)[:, None]
    sth = np.sin(sqrtk * pulse.dt)[:, None]
    for j, p in enumerate(pulse.phi):
        axis = np.array([np.cos(p), -np.sin(p), 0.0])
        v = v * cth + np.cross(axis, v) * sth + np.outer(1 - cth[:, 0], axis) * (v @ axis)[:, None]
        out[j + 1] = v
    vec = PMPVectors(times=pulse.edges, vectors=out)
    return CostateRun(vec, *_drifts(vec))


def costate_ode_closed_loop(v_init, T, dt=1e-3):
    """Integrate the self-consistent system where phi is read off the vectors themselves.

    With cos(phi) = Sx/2 and sin(phi) = -Sy/2 the rotation axis is (Sx, Sy, 0)/2, so the
    3N equations are quadratic. Returns the vectors and the induced phase pulse.
    """
    v = np.array(v_init, dtype=float)
    n_tls = v.shape[0]
    check_initial_data(v, None)
    sqrtk = np.sqrt(np.arange(1, n_tls + 1))

    def rhs(v):
        sx = (sqrtk * v[:, 0]).sum()
        sy = (sqrtk * v[:, 1]).sum()
        axis = 0.5 * np.array([sx, sy, 0.0])
        return sqrtk[:, None] * np.cross(axis, v)

    n = max(1, int(np.ceil(T / dt - 1e-9)))
    h = T / n
    out = np.empty((n + 1, n_tls, 3))
    out[0] = v
    for j in range(n):
        k1 = rhs(v)
        k2 = rhs(v + 0.5 * h * k1)
        k3 = rhs(v + 0.5 * h * k2)
        k4 = rhs(v + h * k3)
        v = v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[j + 1] = v
    vec = PMPVectors(times=h * np.arange(n + 1), vectors=out)
    sx = (sqrtk * out[:, :, 0]).sum(axis=1)
    sy = (sqrtk * out[:, :, 1]).sum(axis=1)
    nodes = np.unwrap(np.arctan2(-sy, sx))
    return CostateRun(vec, *_drifts(vec)), PhasePulse(h, 0.5 * (nodes[1:] + nodes[:-1])), float(nodes[0])
