import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import random_field
from waveturb.dynamics import (BlowUpError, WaveField, frequency_shift, hamiltonian, integrate,
                               rhs_four_wave, rhs_three_wave, waveaction)
from waveturb.lattice import build_lattice


def _dt(lattice, system, frac=1.0):
    return frac * 2 * np.pi / np.max(np.abs(system.dispersion(lattice.wavevectors))) / 20


def test_rk4_matches_adaptive_reference(lat1, cap):
    f0 = random_field(lat1, 0)
    out = integrate(f0, cap, 0.5, _dt(lat1, cap))

    def rhs(t, y):
        return rhs_three_wave(WaveField(lat1, y, t), cap).amplitudes

    ref = solve_ivp(rhs, (0, 0.5), f0.amplitudes, rtol=1e-11, atol=1e-13, method="DOP853").y[:, -1]
    assert np.max(np.abs(out.amplitudes - ref)) < 1e-7


def test_three_wave_energy_conserved(lat2, cap):
    f0 = random_field(lat2, 1)
    H0 = hamiltonian(f0, cap)
    fT = integrate(f0, cap, 1.0, _dt(lat2, cap, 0.5))
    assert abs(hamiltonian(fT, cap) - H0) < 1e-8 * abs(H0)


def test_four_wave_invariants_with_frozen_shift(lat1, schrod):
    f0 = random_field(lat1, 2)
    shift = frequency_shift(f0, schrod)
    N0, H0 = waveaction(f0), hamiltonian(f0, schrod, shift=shift)
    fT = integrate(f0, schrod, 0.5, _dt(lat1, schrod, 0.5), shift_policy="frozen")
    assert abs(waveaction(fT) - N0) < 1e-9 * N0
    assert abs(hamiltonian(fT, schrod, shift=shift) - H0) < 1e-8 * abs(H0)


def test_four_wave_rhs_has_shift_counter_term(lat1, schrod):
    f0 = random_field(lat1, 3)
    shift = frequency_shift(f0, schrod)
    full = rhs_four_wave(f0, schrod, shift=shift).amplitudes
    plain = rhs_four_wave(f0, schrod, shift=type(shift)(np.zeros(lat1.N))).amplitudes
    assert np.allclose(full - plain, 1j * shift.omega * f0.amplitudes)


def test_batched_realizations_match_single(lat1, cap):
    fb = random_field(lat1, 4, batch=(3,))
    out = integrate(fb, cap, 0.2, _dt(lat1, cap))
    one = integrate(fb.replace(amplitudes=fb.amplitudes[1]), cap, 0.2, _dt(lat1, cap))
    assert np.allclose(out.amplitudes[1], one.amplitudes, rtol=0, atol=1e-14)


def test_sampling_returns_trajectory(lat1, cap):
    f0 = random_field(lat1, 5)
    dt = _dt(lat1, cap)
    out, (times, amps) = integrate(f0, cap, 20 * dt, dt, sample_every=5)
    assert times[0] == 0 and times[-1] == pytest.approx(20 * dt)
    assert np.allclose(amps[-1], out.amplitudes)


def test_unresolved_step_rejected(lat1, cap):
    with pytest.raises(ValueError, match="resolve"):
        integrate(random_field(lat1, 0), cap, 1.0, 1.0)


def test_blowup_detected():
    lat = build_lattice(1, 4, 2 * np.pi)
    with pytest.raises(BlowUpError):
        WaveField(lat, np.array([np.nan, 0, 0, 0]))


def test_zero_mode_is_inert(lat2, cap):
    f0 = random_field(lat2, 6)
    assert rhs_three_wave(f0, cap).amplitudes[lat2.zero_mode] == 0
