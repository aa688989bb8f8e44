import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import expi

from waveturb.onemode import (evolve_pdf, face_flux, geometric_grid, initial_pdf, max_steady_flux,
                              moment_hierarchy_rhs, pdf_moments, rayleigh_pdf, stable_dt, steady_density,
                              steady_density_derivative, steady_moments, steady_pdf, tail_series)
from waveturb.specfun import ei, eix


@given(st.floats(-700, 700).filter(lambda x: abs(x) > 1e-300))
def test_ei_matches_scipy(x):
    ref = expi(x)
    assert ei(x) == pytest.approx(ref, rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("x", [0.5, 1.0, 1.0 + 1e-12, 5.0, 40.0, 1e3, 1e6])
def test_eix_scaled_form(x):
    if x < 700:
        assert eix(x) == pytest.approx(np.exp(-x) * expi(x), rel=1e-13)
    else:  # asymptotic 1/x (1 + 1/x + 2/x^2 + 6/x^3)
        assert eix(x) == pytest.approx((1 + 1 / x + 2 / x**2 + 6 / x**3) / x, rel=1e-11)


def test_ei_zero_is_minus_infinity():
    assert ei(0.0) == -np.inf


def test_steady_moments_are_gaussian():
    M = steady_moments(5, 0.6, 0.2)
    n = 3.0
    assert np.allclose(M, [1, n, 2 * n**2, 6 * n**3, 24 * n**4, 120 * n**5], rtol=1e-15)
    assert np.max(np.abs(moment_hierarchy_rhs(M, 0.6, 0.2))) < 1e-12


@pytest.mark.parametrize("F", [-0.05, 0.0, 0.002])
def test_steady_density_normalized(F):
    n, eta, s_cut = 1.3, 0.8, 25.0
    mass = quad(lambda s: steady_density(s, n, F, eta, s_cut), 0, s_cut, points=[1e-8], limit=200)[0]
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_steady_density_carries_constant_flux():
    n, eta, F = 1.0, 0.9, -0.02
    s = np.linspace(0.5, 20, 50)
    P = steady_density(s, n, F, eta, 30.0)
    dP = steady_density_derivative(s, n, F, eta, 30.0)
    h = 1e-5
    fd = (steady_density(s + h, n, F, eta, 30.0) - steady_density(s - h, n, F, eta, 30.0)) / (2 * h)
    assert np.allclose(dP, fd, rtol=1e-6)
    flux = -s * (eta / n * P + eta * dP)
    assert np.allclose(flux, F, rtol=1e-10)


def test_flux_sign_dichotomy():
    n, eta = 1.0, 1.0
    s = np.linspace(10, 11.5, 5)
    ray = rayleigh_pdf(s, n)
    assert np.all(steady_density(s, n, -1e-3, eta, 12.0) > ray)
    assert np.all(steady_density(s, n, 0.5 * max_steady_flux(n, eta, 12.0), eta, 12.0) < ray)


def test_positive_flux_bound_enforced():
    s = np.linspace(0.01, 10, 200)
    Fmax = max_steady_flux(1.0, 1.0, 10.0)
    steady_pdf(s, 1.0, 0.99 * Fmax, 1.0, 10.0)
    with pytest.raises(ValueError, match="positivity"):
        steady_pdf(s, 1.0, 1.5 * Fmax, 1.0, 10.0)
    with pytest.raises(ValueError):
        steady_pdf(s, 1.0, -0.1, 1.0)


def test_tail_series_orders():
    n, eta, F = 1.0, 1.0, -0.01
    gamma = eta / n
    s = np.array([20.0, 40.0, 80.0])
    exact = -(F / eta) * eix(s / n)
    two = tail_series(s, F, gamma, eta, terms=2)
    assert np.all(np.abs(exact - two) <= 4 * (n / s) ** 2 * np.abs(tail_series(s, F, gamma, eta, 1)))


def _relaxing_pdf():
    edges = geometric_grid(40.0, 300, 1e-5)
    # start from a narrow bump around s = 2
    return initial_pdf(edges, lambda s: np.exp(-((s - 2.0) / 0.5) ** 2), n=1.0, eta=1.0, gamma=1.0)


def test_evolution_conserves_mass_and_relaxes_to_rayleigh():
    pdf = _relaxing_pdf()
    out = evolve_pdf(pdf, 0.05, steps=400)
    assert out.total() == pytest.approx(1.0, abs=1e-12)
    ray = rayleigh_pdf(out.s, 1.0)
    inner = out.s < 8
    assert np.max(np.abs(out.P[inner] - ray[inner])) < 5e-3


def test_mean_intensity_follows_kinetic_equation():
    pdf = _relaxing_pdf()
    M0 = pdf_moments(pdf, 1)[1]
    t = 0.5
    out = evolve_pdf(pdf, t / 500, steps=500)
    exact = 1.0 + (M0 - 1.0) * np.exp(-t)
    assert pdf_moments(out, 1)[1] == pytest.approx(exact, rel=2e-3)


def test_explicit_step_respects_cfl():
    pdf = _relaxing_pdf()
    lim = stable_dt(pdf)
    out = evolve_pdf(pdf, 0.9 * lim, steps=3, method="explicit")
    assert out.total() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError, match="CFL"):
        evolve_pdf(pdf, 2 * lim, method="explicit")


def test_boundary_fluxes_vanish():
    F = face_flux(_relaxing_pdf())
    assert F[0] == 0 and F[-1] == 0
