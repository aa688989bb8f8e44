import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from waveturb.lattice import build_lattice
from waveturb.statistics import (AmplitudeLaw, amplitude_phase_independence, distance_correlation,
                                 estimate_moments, estimate_one_mode_pdf, generate_rpa_field, ks_distance,
                                 phase_diagnostics, phi_psi_example, rate_estimate, rayleigh_test,
                                 realization_rng, singular_cumulant)


@pytest.fixture(scope="module")
def lat():
    return build_lattice(1, 8, 2 * np.pi)


def _spec(lat, value=1.0):
    n = np.full(lat.N, value)
    n[lat.zero_mode] = 0
    return n


def test_realizations_independent_of_ensemble_size(lat):
    law = AmplitudeLaw("rayleigh", _spec(lat))
    big = generate_rpa_field(lat, law, 11, 10).amplitudes
    one = generate_rpa_field(lat, law, 11, [7]).amplitudes
    assert np.array_equal(big[7], one[0])
    assert not np.array_equal(big[0], generate_rpa_field(lat, law, 12, 10).amplitudes[0])


def test_realization_rng_is_philox():
    g = realization_rng(3, 4)
    assert isinstance(g.bit_generator, np.random.Philox)


def test_antithetic_pairs(lat):
    law = AmplitudeLaw("rayleigh", _spec(lat))
    a = generate_rpa_field(lat, law, 0, 6, antithetic=True).amplitudes
    assert np.array_equal(a[3:], -a[:3])
    with pytest.raises(ValueError):
        generate_rpa_field(lat, law, 0, 5, antithetic=True)


def test_law_size_checked(lat):
    with pytest.raises(ValueError):
        generate_rpa_field(lat, AmplitudeLaw("rayleigh", np.ones(3)), 0)


def test_deterministic_cumulant_exact(lat):
    n = _spec(lat, 2.0)
    ens = generate_rpa_field(lat, AmplitudeLaw("deterministic-level", n), 0, 50)
    Q, se = singular_cumulant(ens)
    assert np.allclose(Q, -n**2, rtol=1e-14)
    assert np.all(se < 1e-12)


def test_two_level_law_cumulant(lat):
    n = _spec(lat, 1.5)
    law = AmplitudeLaw("user-tabulated", n, values=[0.5, 1.5], weights=[1, 1])
    stats = estimate_moments(generate_rpa_field(lat, law, 1, 4000))
    exact = law.moment(2) - 2 * law.moment(1) ** 2
    live = n > 0
    assert np.allclose(exact[live], -0.75 * n[live] ** 2)
    z = np.abs(stats.Q[live] - exact[live]) / stats.Q_stderr[live]
    assert z.max() < 4.5


def test_rayleigh_moments_gaussian(lat):
    stats = estimate_moments(generate_rpa_field(lat, AmplitudeLaw("rayleigh", _spec(lat)), 2, 20000))
    live = stats.n > 0
    assert np.allclose(stats.normalized_moments()[:2, live], 1.0, atol=0.08)
    assert np.max(np.abs(stats.Q[live]) / stats.Q_stderr[live]) < 4.5


def test_intensity_ks_against_exponential(lat):
    R = 3000
    ens = generate_rpa_field(lat, AmplitudeLaw("rayleigh", _spec(lat, 2.0)), 5, R)
    s = np.abs(ens.amplitudes[:, 1]) ** 2
    assert ks_distance(s, lambda x: 1 - np.exp(-x / 2.0)) < 1.63 / np.sqrt(R)


def test_histogram_normalization(lat):
    ens = generate_rpa_field(lat, AmplitudeLaw("rayleigh", _spec(lat)), 3, 5000)
    edges = np.linspace(0, 30, 61)
    pdf = estimate_one_mode_pdf(ens, 2, edges)
    assert abs(np.sum(pdf.P * np.diff(edges)) - 1) < 1e-12
    assert pdf.meta["outside_fraction"] == 0


def test_histogram_deterministic_single_bin(lat):
    ens = generate_rpa_field(lat, AmplitudeLaw("deterministic-level", _spec(lat, 1.1)), 0, 100)
    edges = np.linspace(0, 2, 9)  # the level sits inside a bin, away from round-off at edges
    pdf = estimate_one_mode_pdf(ens, 1, edges)
    assert np.count_nonzero(pdf.P) == 1
    assert pdf.P.max() == pytest.approx(1 / 0.25)


def test_histogram_warnings(lat):
    ens = generate_rpa_field(lat, AmplitudeLaw("rayleigh", _spec(lat)), 0, 50)
    with pytest.warns(RuntimeWarning):
        pdf = estimate_one_mode_pdf(ens, 1, np.linspace(0, 1, 41))
    assert pdf.meta["outside_fraction"] > 0


def test_phase_diagnostics_accept_rpa_and_reject_locked_phases():
    lat = build_lattice(2, 6, 2 * np.pi)
    n = _spec(lat)
    ens = generate_rpa_field(lat, AmplitudeLaw("rayleigh", n), 0, 2000)
    assert phase_diagnostics(ens).passed
    locked = np.abs(ens.amplitudes) * np.exp(1j * np.angle(ens.amplitudes[:, :1]))
    bad = phase_diagnostics(locked)
    assert not bad.passed
    assert not bad.verdicts["psi_psibar"]


@given(st.integers(200, 2000), st.integers(0, 10**6))
def test_rayleigh_test_p_value_range(R, seed):
    ang = np.random.default_rng(seed).uniform(0, 2 * np.pi, R)
    Z, p = rayleigh_test(ang)
    assert 0 <= p <= 1 and Z >= 0


def test_distance_correlation_detects_dependence():
    rng = np.random.default_rng(0)
    x = rng.normal(size=300)
    assert distance_correlation(x, x**2) > 0.3
    assert distance_correlation(x, rng.normal(size=300)) < 0.15
    assert distance_correlation(x, 3 * x + 1) == pytest.approx(1.0)


def test_amplitude_phase_independent_under_rpa(lat):
    ens = generate_rpa_field(lat, AmplitudeLaw("rayleigh", _spec(lat)), 4, 400)
    dcor, thr, p = amplitude_phase_independence(ens, 1, permutations=100)
    assert p > 0.001
    a = ens.amplitudes[:, 1]
    dep = np.abs(a) * np.exp(1j * np.abs(a))
    dcor2, thr2, p2 = amplitude_phase_independence(dep[:, None], 0, permutations=100)
    assert dcor2 > thr2


def test_phi_psi_covariance():
    ex = phi_psi_example(4000, seed=1)
    assert abs(ex["cov"] - ex["cov_expected"]) < 3 * ex["cov_stderr"]
    assert max(np.abs(ex["psi_mean"]).max(), abs(ex["psi_psi"]), abs(ex["psi_psibar"])) < ex["threshold"]


def test_rate_estimate_recovers_linear_growth(lat):
    n = _spec(lat)
    a0 = generate_rpa_field(lat, AmplitudeLaw("rayleigh", n), 0, 400, antithetic=True).amplitudes
    T, c = 0.5, 0.2
    aT = a0 * np.sqrt(1 + c * T)
    rate, se = rate_estimate(a0, aT, T, n=n, paired=True)
    live = n > 0
    assert np.allclose(rate[live], c * n[live], atol=1e-10)
    plain, se_plain = rate_estimate(a0, aT, T, paired=True, controls=False)
    assert np.all(np.abs(plain[live] - c * n[live]) < 4 * se_plain[live])
