from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmp_pulse.abnormal import (
    LOWER_BOUND,
    abnormal_case2_scan,
    candidate_parameters,
    case1_exact_infeasibility,
    constant_detuning_pulse,
    write_candidates_csv,
)
from pmp_pulse.propagator import propagate_final


def brute_force(l_max):
    out = []
    for l in range(1, l_max + 1):
        for lp in range(l + 1, l_max + 1):
            if lp * lp <= 2 * l * l:
                out.append((2 * np.pi * np.sqrt(lp * lp - l * l), l, lp))
    return sorted(out)


def test_scan_head_for_lmax_10():
    cands = abnormal_case2_scan(10)
    assert [(c.l, c.l_prime) for c in cands] == [(l, lp) for _, l, lp in brute_force(10)]
    head = cands[0]
    assert (head.l, head.l_prime) == (3, 4)
    assert head.delta == pytest.approx(np.sqrt(2 / 7), abs=1e-12)
    assert head.T == pytest.approx(2 * np.pi * np.sqrt(7), abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(2, 30))
def test_bound_and_closure_hold(l_max):
    for c in abnormal_case2_scan(l_max):
        assert c.T >= LOWER_BOUND
        assert c.T > 7.612
        assert c.closure >= 1 - 1e-9
        assert c.l < c.l_prime and c.l_prime ** 2 <= 2 * c.l ** 2


def test_candidate_rejects_invalid_pairs():
    with pytest.raises(ValueError):
        candidate_parameters(1, 2)
    with pytest.raises(ValueError):
        candidate_parameters(4, 3)
    with pytest.raises(ValueError):
        abnormal_case2_scan(1)


def test_lab_frame_round_trip_of_head_candidate():
    c = abnormal_case2_scan(10)[0]
    # rotating-frame detuning +delta is the lab phase ramp -delta t
    pulse = constant_detuning_pulse(-c.delta, 0.0, c.T, dt=1e-3)
    for k in (1, 2):
        assert abs(propagate_final(pulse, k)[0]) >= 1 - 1e-6


def test_constant_detuning_pulse_examples():
    p = constant_detuning_pulse(0.0, 0.0, np.pi)
    np.testing.assert_array_equal(p.phi, 0.0)
    p = constant_detuning_pulse(1.0, 0.0, 2 * np.pi)
    assert p.duration == pytest.approx(2 * np.pi)
    np.testing.assert_allclose(p.phi, p.midpoints, atol=1e-12)
    # the ramp reaches 2 pi at t = T
    assert p.phi[-1] + 0.5 * p.dt == pytest.approx(2 * np.pi, abs=1e-12)
    with pytest.raises(ValueError):
        constant_detuning_pulse(1.0, 0.0, 0.0)


def test_infeasibility_first_point():
    rep = case1_exact_infeasibility(0)
    assert rep.min_residual == pytest.approx(np.sqrt(2) * np.pi / 2 - np.pi / 2, abs=1e-12)


def test_infeasibility_large_scan():
    rep = case1_exact_infeasibility(10 ** 6)
    assert rep.min_residual > 0
    assert rep.exact_nonzero
    assert np.all(np.diff(rep.running_min) <= 0)
    # approximate solutions get better as n grows
    assert rep.running_min[-1] < rep.running_min[10] < rep.residuals[0]


def test_rational_control_experiment():
    rep = case1_exact_infeasibility(3, ratio=Fraction(7, 5))
    assert rep.residuals[2] == 0.0
    assert not rep.exact_nonzero


@given(st.integers(0, 200), st.integers(0, 200))
def test_odd_rationals_are_detected(a, b):
    p, q = 2 * a + 1, 2 * b + 1
    rep = case1_exact_infeasibility(b, ratio=Fraction(p, q))
    assert rep.residuals[b] == 0.0
    assert not rep.exact_nonzero


def test_candidates_csv(tmp_path):
    path = tmp_path / "c.csv"
    write_candidates_csv(path, abnormal_case2_scan(5), header="config_hash=abc")
    lines = path.read_text().splitlines()
    assert lines[:2] == ["# config_hash=abc", "l,l_prime,delta,T,gate_phase_achieved"]
    assert lines[2].startswith("3,4,")
