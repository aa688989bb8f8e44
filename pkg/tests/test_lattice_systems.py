import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from waveturb.lattice import build_lattice, find_quartets, find_triads
from waveturb.systems import WaveSystem, capillary, custom, gravity, nls, rossby


def test_lattice_size_and_zero_mode():
    lat = build_lattice(2, 6, 2 * np.pi)
    assert lat.N == 36
    assert np.all(lat.wavevectors[lat.zero_mode] == 0)
    assert lat.spacing == pytest.approx(1.0)


def test_bad_lattice_rejected():
    with pytest.raises(ValueError):
        build_lattice(0, 6, 1.0)
    with pytest.raises(ValueError):
        build_lattice(2, 6, -1.0)


def test_flat_index_round_trip(lat2):
    flat = np.arange(lat2.N)
    assert np.array_equal(lat2.flat_index(lat2.indices[flat]), flat)


def test_triads_conserve_momentum_and_respect_window(lat2, cap):
    tr = find_triads(lat2, cap, 0.5)
    k = lat2.wavevectors
    assert len(tr) > 0
    assert np.allclose(k[tr.j], k[tr.m] + k[tr.n])
    assert np.all(np.abs(tr.detuning) <= 0.5)
    assert lat2.zero_mode not in tr.modes


def test_triads_symmetric_in_daughters(lat2, cap):
    tr = find_triads(lat2, cap, 0.5)
    fwd = set(zip(tr.j, tr.m, tr.n))
    assert fwd == set(zip(tr.j, tr.n, tr.m))


def test_triads_cached(lat2, cap):
    assert find_triads(lat2, cap, 0.5) is find_triads(lat2, cap, 0.5)


def test_quartet_symmetries(lat1, schrod):
    q = find_quartets(lat1, schrod, 1.0)
    k = lat1.wavevectors
    assert np.allclose(k[q.j] + k[q.l], k[q.m] + k[q.n])
    s = set(zip(q.j, q.l, q.m, q.n))
    assert s == set(zip(q.l, q.j, q.m, q.n))
    assert s == set(zip(q.m, q.n, q.j, q.l))


def test_negative_window_rejected(lat1, cap):
    with pytest.raises(ValueError):
        find_triads(lat1, cap, -1.0)


@given(st.integers(1, 2), st.integers(3, 7), st.floats(0.0, 3.0))
def test_triad_window_monotone(d, n_side, dw):
    lat = build_lattice(d, n_side, 2 * np.pi)
    sys_ = capillary()
    small = set(zip(*(getattr(find_triads(lat, sys_, dw), f) for f in "jmn")))
    big = set(zip(*(getattr(find_triads(lat, sys_, dw + 0.5), f) for f in "jmn")))
    assert small <= big


def test_dispersion_laws():
    k = np.array([[3.0, 4.0]])
    assert capillary(sigma=2.0).dispersion(k)[0] == pytest.approx(np.sqrt(2.0) * 5**1.5)
    assert gravity(g=9.81).dispersion(k)[0] == pytest.approx(np.sqrt(9.81 * 5))
    assert nls().dispersion(k)[0] == pytest.approx(25.0)
    assert rossby(beta=1.0, rho=1.0).dispersion(k)[0] == pytest.approx(3.0 / 26.0)
    assert rossby().dispersion(np.array([[1.0, 0.0]]))[0] == pytest.approx(0.5)


def test_system_validation():
    with pytest.raises(ValueError):
        capillary(epsilon=-1.0)
    with pytest.raises(ValueError):
        WaveSystem("plasma")
    with pytest.raises(TypeError):
        nls().coupling3(np.zeros((1, 1)), np.zeros((1, 1)), np.zeros((1, 1)))


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=2),
       st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_capillary_coupling_symmetric_in_daughters(km, kn):
    s = capillary()
    km, kn = np.array([km]), np.array([kn])
    kl = km + kn
    assert np.allclose(s.coupling3(kl, km, kn), s.coupling3(kl, kn, km), atol=1e-12)


def test_nls_coupling_constant():
    k = np.array([[1.0], [2.0], [-3.0]])
    assert np.all(nls().coupling4(k, k, k, k) == 1.0)
    z = np.zeros((3, 1))
    assert np.all(nls().coupling4(z, k, k, k) == 0.0)


def test_rossby_coupling_vanishes_without_x_component():
    s = rossby()
    kl, km = np.array([[0.0, 1.0]]), np.array([[1.0, 2.0]])
    assert s.coupling3(kl, km, kl - km)[0] == 0


def test_custom_system_uses_callables():
    s = custom(lambda k: np.abs(k[..., 0]), lambda a, b, c: np.ones(len(a)), 3)
    assert s.dispersion(np.array([[-2.0]]))[0] == 2.0
    assert s.order == 3
