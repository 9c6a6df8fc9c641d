"""Time-optimal laser-phase pulses for N effective two-level systems sharing one drive."""

from .errors import (
    DurationMismatch,
    EnergyDrift,
    InconsistentInitialData,
    InconsistentInvariants,
    InvalidParameters,
    NoCrossing,
    NoRealSolution,
    OptimizationFailed,
    PMPError,
    RecordError,
    Stalled,
)
from .extremals import (
    DetuningCurve,
    InvariantTriple,
    PMPVectors,
    QuarticPotential,
    costate_ode_closed_loop,
    costate_ode_general,
    integrate_detuning,
    phase_from_detuning,
    potential_coeffs,
    potential_from_asym,
    potential_from_sym,
    reconstruct_vectors,
    recover_invariants,
    turning_points,
    verify_pmp,
)
from .propagator import PhasePulse, Trajectory, propagate_final, propagate_piecewise
from .records import ExtremalRecord, load_record
from .targets import CZ_LINE, ExcitationTorus, PerTlsTarget, PhaseLine, fidelity_phaseline, fidelity_torus

__version__ = "0.1.0"
