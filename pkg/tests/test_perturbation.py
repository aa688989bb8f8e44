import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import dblquad, quad

from conftest import random_field
from waveturb.dynamics import integrate
from waveturb.experiments import perturbation_scaling
from waveturb.lattice import build_lattice
from waveturb.perturbation import (check_time_separation, delta_kernel, e_kernel, first_iterate,
                                   first_iterate_4w, second_iterate_3w)
from waveturb.systems import capillary


def _delta_quad(x, T):
    re = quad(lambda t: np.cos(x * t), 0, T)[0]
    im = quad(lambda t: np.sin(x * t), 0, T)[0]
    return re + 1j * im


def _e_quad(x, y, T):
    def f(tau, t, part):
        z = np.exp(1j * ((x - y) * tau + y * t))
        return z.real if part == 0 else z.imag

    kw = dict(epsabs=1e-12, epsrel=1e-10)
    re = dblquad(lambda tau, t: f(tau, t, 0), 0, T, 0, lambda t: t, **kw)[0]
    im = dblquad(lambda tau, t: f(tau, t, 1), 0, T, 0, lambda t: t, **kw)[0]
    return re + 1j * im


@pytest.mark.parametrize("x", [0.0, 1e-9, 0.3, -2.0, 17.0])
def test_delta_kernel_against_quadrature(x):
    assert delta_kernel(x, 2.0) == pytest.approx(_delta_quad(x, 2.0), abs=1e-10)


@pytest.mark.parametrize("x,y", [(0.0, 0.0), (1.0, 1.0), (1.0, 1.0 + 1e-6), (2.0, -1.5), (0.0, 3.0),
                                 (-4.0, 0.5), (1e-5, 0.0)])
def test_e_kernel_against_double_quadrature(x, y):
    assert e_kernel(x, y, 1.5) == pytest.approx(_e_quad(x, y, 1.5), abs=1e-9)


@given(st.floats(-50, 50), st.floats(-1e-3, 1e-3))
def test_e_kernel_continuous_across_series_switch(y, h):
    T = 1.0
    near = e_kernel(y + h, y, T)
    far = e_kernel(y + h + 2e-4, y, T)
    assert abs(near - far) < 1e-3


def test_e_kernel_diagonal_closed_form():
    # E(x, x) = int_0^T t exp(ixt) dt
    x, T = 0.7, 3.0
    exact = (np.exp(1j * x * T) * (1 - 1j * x * T) - 1) / x**2
    assert e_kernel(x, x, T) == pytest.approx(exact, abs=1e-12)


def test_kernel_requires_positive_T():
    with pytest.raises(ValueError):
        delta_kernel(0.0, 0.0)


def test_first_iterate_is_linear_response():
    lat = build_lattice(1, 12, 2 * np.pi)
    f0 = random_field(lat, 7)
    a1 = first_iterate(f0, capillary(epsilon=0.1), T=0.5).amplitudes
    est = []
    for eps in (1e-3, 5e-4):
        s = capillary(epsilon=eps)
        dt = 2 * np.pi / np.max(s.dispersion(lat.wavevectors)) / 40
        est.append((integrate(f0, s, 0.5, dt).amplitudes - f0.amplitudes) / eps)
    rich = 2 * est[1] - est[0]
    assert np.max(np.abs(rich - a1)) < 1e-5 * np.max(np.abs(a1))


def test_second_iterate_residual_is_third_order():
    res = perturbation_scaling("capillary", d=1, n_side=12, epsilons=(0.02, 0.04, 0.08))
    assert res.summary["slope"] == pytest.approx(3.0, abs=0.3)
    assert res.summary["slope_order1"] == pytest.approx(2.0, abs=0.3)


def test_iterates_check_order(lat1, cap, schrod):
    f0 = random_field(lat1, 0)
    with pytest.raises(TypeError):
        first_iterate_4w(f0, cap)
    with pytest.raises(TypeError):
        second_iterate_3w(f0, schrod)
    with pytest.raises(ValueError):
        first_iterate(f0.replace(time=1.0), cap)


def test_time_separation_warning():
    with pytest.warns(RuntimeWarning):
        assert not check_time_separation(1.0, 1.0)
    assert check_time_separation(100.0, 1.0)
