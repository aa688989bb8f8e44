import numpy as np
import pytest
from hypothesis import settings

from waveturb.lattice import build_lattice
from waveturb.systems import capillary, nls

settings.register_profile("waveturb", deadline=None, max_examples=40)
settings.load_profile("waveturb")


@pytest.fixture(scope="session")
def lat1():
    return build_lattice(1, 16, 2 * np.pi)


@pytest.fixture(scope="session")
def lat2():
    return build_lattice(2, 6, 2 * np.pi)


@pytest.fixture(scope="session")
def cap():
    return capillary(epsilon=0.05)


@pytest.fixture(scope="session")
def schrod():
    return nls(epsilon=0.05)


def random_field(lattice, seed, amplitude=1.0, batch=()):
    from waveturb.dynamics import WaveField

    rng = np.random.default_rng(seed)
    shape = tuple(batch) + (lattice.N,)
    a = amplitude * (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / np.sqrt(2)
    a[..., lattice.zero_mode] = 0
    return WaveField(lattice, a)
