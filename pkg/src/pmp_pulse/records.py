"""Extremal records and their JSON form (schema 1)."""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NoRealSolution, PMPError, RecordError
from .extremals import DetuningCurve, InvariantTriple, QuarticPotential, recover_invariants
from .propagator import PhasePulse, propagate_piecewise
from .targets import target_from_dict

SCHEMA = 1


@dataclass
class ExtremalRecord:
    pulse: PhasePulse
    target: object
    fidelity: float
    curve: DetuningCurve = None
    potential: QuarticPotential = None
    invariants: InvariantTriple = None
    params: dict = field(default_factory=dict)
    parametrization: str = None
    crossings: int = None
    sign: int = 1
    phi0: float = 0.0
    case: str = None
    config_hash: str = None
    trajectories: list = field(default_factory=list, repr=False)

    @property
    def T(self):
        return self.pulse.duration

    @property
    def dt(self):
        return self.pulse.dt

    def finals(self):
        return [tr.final for tr in self.trajectories]

    def rebuild_trajectories(self):
        self.trajectories = [propagate_piecewise(self.pulse, k) for k in range(1, self.target.n_tls + 1)]
        return self

    def summary(self):
        p = ", ".join(f"{k}={v:.6f}" for k, v in self.params.items())
        return f"case={self.case}, T={self.T:.6f}, fidelity={self.fidelity:.9f}, params=({p})"

    def to_dict(self):
        d = {
            "schema": SCHEMA,
            "case": self.case,
            "config_hash": self.config_hash,
            "target": self.target.to_dict(),
            "potential": None if self.potential is None else self.potential.as_dict(),
            "params": dict(self.params),
            "parametrization": self.parametrization,
            "dt": self.pulse.dt,
            "T": self.T,
            "phi0": self.phi0,
            "crossings": self.crossings,
            "sign": self.sign,
            "fidelity": self.fidelity,
            "invariants": None if self.invariants is None else self.invariants.as_dict(),
            "phi": self.pulse.phi.tolist(),
        }
        if self.curve is not None:
            d["delta"] = self.curve.delta.tolist()
            d["ddelta"] = self.curve.ddelta.tolist()
        return d

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())


def _need(d, key, kind, path=""):
    if key not in d:
        raise RecordError("missing field", path=f"{path}{key}")
    val = d[key]
    if kind == "number":
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise RecordError(f"expected a number, got {type(val).__name__}", path=f"{path}{key}")
        return float(val)
    if kind == "array":
        if not isinstance(val, list):
            raise RecordError("expected a list of numbers", path=f"{path}{key}")
        try:
            arr = np.asarray(val, dtype=float)
        except (TypeError, ValueError):
            raise RecordError("expected a list of numbers", path=f"{path}{key}") from None
        if arr.ndim != 1:
            raise RecordError("expected a flat list", path=f"{path}{key}")
        return arr
    return val


def record_from_dict(d, require_potential=False):
    if not isinstance(d, dict):
        raise RecordError("record must be a JSON object")
    if d.get("schema") != SCHEMA:
        raise RecordError(f"unsupported schema {d.get('schema')!r}", path="schema")
    try:
        target = target_from_dict(_need(d, "target", "object"))
    except (PMPError, KeyError, TypeError, ValueError) as exc:
        raise RecordError(str(exc), path="target") from None
    dt = _need(d, "dt", "number")
    phi = _need(d, "phi", "array")
    try:
        pulse = PhasePulse(dt, phi)
    except ValueError as exc:
        raise RecordError(str(exc), path="phi") from None
    pot = d.get("potential")
    if pot is None:
        if require_potential:
            raise RecordError("missing quartic potential", path="potential")
        potential = None
    else:
        if not isinstance(pot, dict):
            raise RecordError("expected an object", path="potential")
        coeffs = {c: _need(pot, c, "number", "potential.") for c in ("c0", "c1", "c2", "c3", "c4")}
        try:
            potential = QuarticPotential(**coeffs)
        except PMPError as exc:
            raise RecordError(str(exc), path="potential") from None
    curve = None
    if "delta" in d:
        delta = _need(d, "delta", "array")
        ddelta = _need(d, "ddelta", "array")
        if delta.size != pulse.n_steps + 1 or ddelta.size != delta.size:
            raise RecordError(f"expected {pulse.n_steps + 1} samples", path="delta")
        curve = DetuningCurve(dt=dt, delta=delta, ddelta=ddelta, T=pulse.duration, potential=potential,
                              crossings=d.get("crossings"), sign=d.get("sign", 1))
    inv = d.get("invariants")
    if inv is not None:
        try:
            invariants = InvariantTriple(*(_need(inv, c, "number", "invariants.") for c in ("C", "r1", "r2")))
        except ValueError as exc:
            raise RecordError(str(exc), path="invariants") from None
    elif potential is not None:
        try:
            invariants = recover_invariants(potential)
        except NoRealSolution:
            invariants = None
    else:
        invariants = None
    rec = ExtremalRecord(
        pulse=pulse,
        target=target,
        fidelity=_need(d, "fidelity", "number"),
        curve=curve,
        potential=potential,
        invariants=invariants,
        params=dict(d.get("params") or {}),
        parametrization=d.get("parametrization"),
        crossings=d.get("crossings"),
        sign=d.get("sign", 1),
        phi0=float(d.get("phi0", 0.0)),
        case=d.get("case"),
        config_hash=d.get("config_hash"),
    )
    return rec.rebuild_trajectories()


def load_record(path, require_potential=False):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise RecordError(f"invalid JSON: {exc}", path=str(path)) from None
    return record_from_dict(d, require_potential=require_potential)
