import numpy as np
import pytest
import scipy.linalg
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from pmp_pulse.propagator import (
    BLOCKADE_BASIS,
    PhasePulse,
    blockade_hamiltonian,
    blockade_reduction_error,
    blockade_state,
    constant_detuning_unitary,
    embed_effective,
    lab_from_rotating,
    propagate_constant_detuning,
    propagate_detuned,
    propagate_final,
    propagate_full_blockade,
    propagate_piecewise,
    step_unitary,
    write_bloch_csv,
)
from pmp_pulse.quantum import KET0, KET1, hamiltonian_detuned, hamiltonian_phase


def flat(phi0, T, dt=1e-3):
    n = int(round(T / dt))
    return PhasePulse(T / n, np.full(n, phi0))


@pytest.mark.parametrize(
    "k, T, expected",
    [
        (1, np.pi, -1j * KET1),
        (2, np.pi / np.sqrt(2), -1j * KET1),
        (1, 2 * np.pi, -KET0),
    ],
)
def test_resonant_rabi(k, T, expected):
    psi = propagate_piecewise(flat(0.0, T), k).final
    np.testing.assert_allclose(psi, expected, atol=1e-9)


def test_pulse_validation_and_empty_pulse():
    with pytest.raises(ValueError):
        PhasePulse(0.0, [0.0])
    with pytest.raises(ValueError):
        PhasePulse(0.1, [np.inf])
    empty = PhasePulse(0.1, [])
    assert empty.duration == 0.0
    np.testing.assert_array_equal(propagate_final(empty, 2, KET1), KET1)


@given(st.integers(1, 4), st.floats(-10, 10), st.floats(1e-4, 2.0))
def test_step_unitary_matches_expm(k, phi, dt):
    ref = scipy.linalg.expm(-1j * hamiltonian_phase(k, phi) * dt)
    np.testing.assert_allclose(step_unitary(k, phi, dt), ref, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.lists(st.floats(-6, 6), min_size=2, max_size=60), st.floats(0.01, 0.5))
def test_unitarity_and_composition(k, phis, dt):
    pulse = PhasePulse(dt, phis)
    tr = propagate_piecewise(pulse, k, KET0)
    np.testing.assert_allclose(tr.norms(), 1.0, atol=1e-12)
    half = len(phis) // 2
    mid = propagate_final(PhasePulse(dt, phis[:half]), k, KET0)
    end = propagate_final(PhasePulse(dt, phis[half:]), k, mid)
    np.testing.assert_allclose(end, tr.final, atol=1e-12)


def test_long_trajectory_keeps_norm():
    rng = np.random.default_rng(7)
    pulse = PhasePulse(1e-3, np.cumsum(rng.normal(scale=0.01, size=100_000)))
    for k in (1, 2):
        assert abs(np.linalg.norm(propagate_final(pulse, k)) - 1) < 1e-9


def test_constant_detuning_closed_form_symbolic():
    # independent derivation of exp(-i (d |1><1| + sqrt(k)/2 sigma_x) T) with sympy
    d, T = sp.symbols("d T", real=True)
    for k in (1, 2):
        H = sp.Matrix([[0, sp.sqrt(k) / 2], [sp.sqrt(k) / 2, d]])
        for dv, Tv in ((0.3, 1.7), (-1.2, 4.0), (2.0, 0.5)):
            ref = np.array((-sp.I * H.subs(d, dv) * Tv).exp().evalf(), dtype=complex)
            np.testing.assert_allclose(constant_detuning_unitary(k, dv, Tv), ref, atol=1e-12)


@pytest.mark.parametrize(
    "k, delta, T, expected",
    [
        (1, 0.0, 2 * np.pi, -KET0),
        (1, 0.0, np.pi, -1j * KET1),
        # generalized Rabi frequency sqrt(2 + 2) = 2, so T = pi is a full turn
        (2, np.sqrt(2), np.pi, -np.exp(-0.5j * np.sqrt(2) * np.pi) * KET0),
    ],
)
def test_constant_detuning_examples(k, delta, T, expected):
    psi = propagate_constant_detuning(k, delta, T, KET0)
    np.testing.assert_allclose(psi, expected, atol=1e-12)
    ref = scipy.linalg.expm(-1j * hamiltonian_detuned(k, delta) * T) @ KET0
    np.testing.assert_allclose(psi, ref, atol=1e-12)


@pytest.mark.parametrize("k, delta, T", [(2, np.sqrt(2), np.pi), (1, 0.7, 3.3), (2, -0.4, 5.0)])
def test_constant_detuning_matches_lab_frame_pulse(k, delta, T):
    # a lab phase ramp phi = -delta t is the rotating-frame detuning +delta
    n = int(round(T / 1e-4))
    h = T / n
    pulse = PhasePulse(h, -delta * h * (np.arange(n) + 0.5))
    lab = propagate_final(pulse, k, KET0)
    rot = lab_from_rotating(propagate_constant_detuning(k, delta, T, KET0), -delta * T)
    np.testing.assert_allclose(lab, rot, atol=1e-6)


def test_frame_equivalence_populations():
    T, h = 3.0, 1e-4
    n = int(round(T / h))
    t_nodes = h * np.arange(n + 1)
    phi_nodes = 0.8 * np.sin(1.3 * t_nodes) + 0.2 * t_nodes ** 2
    pulse = PhasePulse(h, 0.5 * (phi_nodes[1:] + phi_nodes[:-1]))
    t_mid = h * (np.arange(n) + 0.5)
    rate = 0.8 * 1.3 * np.cos(1.3 * t_mid) + 0.4 * t_mid
    for k in (1, 2):
        lab = propagate_piecewise(pulse, k).populations()
        rot = propagate_detuned(-rate, h, k).populations()
        assert np.max(np.abs(lab - rot)) < 1e-6


def test_dt_halving_changes_little():
    T = 4.0
    for k in (1, 2):
        ends = []
        for dt in (1e-3, 5e-4):
            n = int(round(T / dt))
            nodes = np.sin(dt * np.arange(n + 1))
            ends.append(np.abs(propagate_final(PhasePulse(dt, 0.5 * (nodes[1:] + nodes[:-1])), k)) ** 2)
        assert np.max(np.abs(ends[0] - ends[1])) < 1e-6


def test_blockade_hamiltonian_structure():
    assert len(BLOCKADE_BASIS) == 9
    h = blockade_hamiltonian(0.4, 7.0)
    np.testing.assert_allclose(h, h.conj().T)
    i00 = BLOCKADE_BASIS.index("00")
    assert not np.any(h[i00])


def test_blockade_uncoupled_ground_state():
    rng = np.random.default_rng(0)
    pulse = PhasePulse(0.01, rng.normal(size=300))
    out = propagate_full_blockade(pulse, 3.0, blockade_state("00"))
    np.testing.assert_array_equal(out, blockade_state("00"))


def test_blockade_limit_gives_sqrt2_rabi():
    out = propagate_full_blockade(flat(0.0, np.pi / np.sqrt(2)), 1e6, blockade_state("11"))
    w = embed_effective(2, KET1)
    assert abs(np.vdot(w, out)) >= 0.999


def test_no_blockade_is_a_product_flip():
    out = propagate_full_blockade(flat(0.0, np.pi), 0.0, blockade_state("11"))
    assert abs(out[BLOCKADE_BASIS.index("rr")]) == pytest.approx(1.0, abs=1e-9)


def test_blockade_propagator_matches_expm():
    rng = np.random.default_rng(1)
    phis = rng.uniform(-3, 3, size=5)
    pulse = PhasePulse(0.2, phis)
    psi0 = rng.normal(size=9) + 1j * rng.normal(size=9)
    psi0 /= np.linalg.norm(psi0)
    ref = psi0.copy()
    for p in phis:
        ref = scipy.linalg.expm(-1j * blockade_hamiltonian(p, 40.0) * 0.2) @ ref
    np.testing.assert_allclose(propagate_full_blockade(pulse, 40.0, psi0), ref, atol=1e-12)


def test_reduction_error_limits():
    empty = PhasePulse(0.1, [])
    rep = blockade_reduction_error(empty, 10.0)
    assert rep.max_infidelity == 0.0
    rng = np.random.default_rng(2)
    pulse = PhasePulse(1e-2, np.cumsum(rng.normal(scale=0.05, size=400)))
    assert blockade_reduction_error(pulse, 1e6).max_infidelity <= 1e-5


def test_pulse_symmetries_helpers():
    p = PhasePulse(0.5, [0.1, 0.2, 0.4])
    np.testing.assert_allclose(p.shifted(1.0).phi, [1.1, 1.2, 1.4])
    np.testing.assert_allclose(p.mirrored().phi, 2 * np.pi - np.array([0.4, 0.2, 0.1]))
    np.testing.assert_allclose(p.sample([0.25, 0.5]), [0.1, 0.15])


def test_bloch_csv(tmp_path):
    tr = propagate_piecewise(flat(0.0, np.pi, dt=np.pi / 4), 1)
    path = tmp_path / "b.csv"
    write_bloch_csv(path, tr, header="config_hash=abc")
    lines = path.read_text().splitlines()
    assert lines[0] == "# config_hash=abc"
    assert lines[1] == "t,x,y,z"
    assert len(lines) == 2 + 5
    z_end = float(lines[-1].split(",")[3])
    assert z_end == pytest.approx(-1.0)
