"""Finite Fourier lattices and resonance search for triads and quartets."""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "FourierLattice",
    "Triad",
    "Quartet",
    "TriadSet",
    "QuartetSet",
    "build_lattice",
    "find_triads",
    "find_quartets",
]

# pair/triple rows handled per chunk in the resonance scans
_CHUNK = 1 << 20


@dataclass(frozen=True)
class FourierLattice:
    """Centered box of integer wavevector indices in ``d`` dimensions.

    Mode ``l`` has wavevector ``k = 2*pi*l/L``.  For even ``n_side`` the
    indices along each axis run from ``-n_side/2`` to ``n_side/2 - 1``; for
    odd ``n_side`` they are symmetric about zero.
    """

    d: int
    n_side: int
    L: float
    indices: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {self.d}")
        if int(self.n_side) != self.n_side or self.n_side < 2:
            raise ValueError(f"n_side must be an integer >= 2, got {self.n_side}")
        if not self.L > 0:
            raise ValueError(f"box length L must be positive, got {self.L}")
        axis = np.arange(self.n_side) - self.n_side // 2
        idx = np.array(list(itertools.product(axis, repeat=self.d)), dtype=np.int64)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def N(self) -> int:
        return self.n_side**self.d

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.L

    @property
    def k_max(self) -> float:
        return np.pi * self.n_side / self.L

    @property
    def lo(self) -> int:
        return -(self.n_side // 2)

    @property
    def hi(self) -> int:
        return self.lo + self.n_side - 1

    @functools.cached_property
    def wavevectors(self) -> np.ndarray:
        k = self.spacing * self.indices.astype(float)
        k.setflags(write=False)
        return k

    @functools.cached_property
    def wavenumbers(self) -> np.ndarray:
        k = np.linalg.norm(self.wavevectors, axis=1)
        k.setflags(write=False)
        return k

    @functools.cached_property
    def zero_mode(self) -> int:
        return int(self.flat_index(np.zeros(self.d, dtype=np.int64)))

    def contains(self, idx) -> np.ndarray:
        idx = np.asarray(idx)
        return np.all((idx >= self.lo) & (idx <= self.hi), axis=-1)

    def flat_index(self, idx) -> np.ndarray:
        """Flat mode number of integer index vector(s) ``idx`` (last axis = d)."""
        idx = np.asarray(idx, dtype=np.int64)
        if not np.all(self.contains(idx)):
            raise IndexError("index outside the lattice box")
        shifted = idx - self.lo
        flat = np.zeros(idx.shape[:-1], dtype=np.int64)
        for axis in range(self.d):
            flat = flat * self.n_side + shifted[..., axis]
        return flat

    def wavevector(self, flat) -> np.ndarray:
        return self.wavevectors[np.asarray(flat)]

    def to_dict(self) -> dict:
        return {"d": self.d, "n_side": int(self.n_side), "L": float(self.L)}


def build_lattice(d: int, n_side: int, L: float) -> FourierLattice:
    """Construct a :class:`FourierLattice`; raises ``ValueError`` on bad input."""
    return FourierLattice(d=int(d), n_side=n_side, L=float(L))


class Triad(NamedTuple):
    j: int
    m: int
    n: int
    detuning: float


class Quartet(NamedTuple):
    j: int
    l: int
    m: int
    n: int
    detuning: float


class _ResonanceSet:
    """Columnar storage shared by triad and quartet sets.

    Instances hash by identity so they can key the per-set caches used by
    the dynamics and perturbation modules.
    """

    _fields: tuple = ()
    _row: type = tuple

    def __init__(self, lattice, omega, detuning, **cols):
        self.lattice = lattice
        self.omega = np.asarray(omega, dtype=float)
        self.detuning = np.asarray(detuning, dtype=float)
        for name in self._fields:
            setattr(self, name, np.asarray(cols[name], dtype=np.int64))
        for arr in [self.omega, self.detuning] + [getattr(self, f) for f in self._fields]:
            arr.setflags(write=False)

    def __len__(self):
        return len(self.detuning)

    def __getitem__(self, i):
        vals = [int(getattr(self, f)[i]) for f in self._fields]
        return self._row(*vals, float(self.detuning[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def modes(self) -> np.ndarray:
        return np.unique(np.concatenate([getattr(self, f) for f in self._fields]))


class TriadSet(_ResonanceSet):
    """Ordered triples with ``k_j = k_m + k_n``.

    ``omega`` holds the mode frequencies used to form the detunings
    ``omega_j - omega_m - omega_n``.
    """

    _fields = ("j", "m", "n")
    _row = Triad

    def select(self, mask) -> "TriadSet":
        mask = np.asarray(mask)
        return TriadSet(self.lattice, self.omega, self.detuning[mask],
                        j=self.j[mask], m=self.m[mask], n=self.n[mask])


class QuartetSet(_ResonanceSet):
    """Ordered quadruples with ``k_j + k_l = k_m + k_n``."""

    _fields = ("j", "l", "m", "n")
    _row = Quartet

    def select(self, mask) -> "QuartetSet":
        mask = np.asarray(mask)
        return QuartetSet(self.lattice, self.omega, self.detuning[mask],
                          j=self.j[mask], l=self.l[mask], m=self.m[mask], n=self.n[mask])


def _omega_of(lattice, dispersion) -> np.ndarray:
    fn = getattr(dispersion, "dispersion", dispersion)
    omega = np.asarray(fn(lattice.wavevectors), dtype=float)
    if omega.shape != (lattice.N,) or not np.all(np.isfinite(omega)):
        raise ValueError("dispersion must return a finite frequency for every lattice mode")
    return omega


def _check_dw(dw):
    if not dw >= 0:  # also rejects NaN
        raise ValueError(f"frequency broadening must be >= 0, got {dw}")


def find_triads(lattice: FourierLattice, dispersion, dw: float) -> TriadSet:
    """All ordered triples ``(j, m, n)`` with ``k_j = k_m + k_n`` and
    ``|omega_j - omega_m - omega_n| <= dw``; the zero mode never takes part.

    ``dispersion`` is either a :class:`~waveturb.systems.WaveSystem` or a
    callable mapping an ``(N, d)`` array of wavevectors to frequencies.
    Results are cached per ``(lattice, dispersion, dw)``.
    """
    _check_dw(dw)
    return _find_triads_cached(lattice, dispersion, float(dw))


@functools.lru_cache(maxsize=64)
def _find_triads_cached(lattice, dispersion, dw):
    omega = _omega_of(lattice, dispersion)
    idx = lattice.indices
    live = np.flatnonzero(np.any(idx != 0, axis=1))
    js, ms, ns = [], [], []
    rows_per_chunk = max(1, _CHUNK // max(len(live), 1))
    for start in range(0, len(live), rows_per_chunk):
        m = np.repeat(live[start:start + rows_per_chunk], len(live))
        n = np.tile(live, len(m) // len(live))
        s = idx[m] + idx[n]
        ok = lattice.contains(s) & np.any(s != 0, axis=1)
        m, n = m[ok], n[ok]
        j = lattice.flat_index(s[ok])
        det = omega[j] - omega[m] - omega[n]
        keep = np.abs(det) <= dw
        js.append(j[keep]); ms.append(m[keep]); ns.append(n[keep])
    j, m, n = (np.concatenate(a) if a else np.zeros(0, np.int64) for a in (js, ms, ns))
    return TriadSet(lattice, omega, omega[j] - omega[m] - omega[n], j=j, m=m, n=n)


def find_quartets(lattice: FourierLattice, dispersion, dw: float) -> QuartetSet:
    """All ordered quadruples ``(j, l, m, n)`` with ``k_j + k_l = k_m + k_n``
    and ``|omega_j + omega_l - omega_m - omega_n| <= dw``, zero mode excluded."""
    _check_dw(dw)
    return _find_quartets_cached(lattice, dispersion, float(dw))


@functools.lru_cache(maxsize=64)
def _find_quartets_cached(lattice, dispersion, dw):
    omega = _omega_of(lattice, dispersion)
    idx = lattice.indices
    live = np.flatnonzero(np.any(idx != 0, axis=1))
    L = len(live)
    pairs_j = np.repeat(live, L)
    pairs_l = np.tile(live, L)
    out = {k: [] for k in "jlmn"}
    rows_per_chunk = max(1, _CHUNK // max(L, 1))
    for start in range(0, len(pairs_j), rows_per_chunk):
        j = np.repeat(pairs_j[start:start + rows_per_chunk], L)
        l = np.repeat(pairs_l[start:start + rows_per_chunk], L)
        m = np.tile(live, len(j) // L)
        s = idx[j] + idx[l] - idx[m]
        ok = lattice.contains(s) & np.any(s != 0, axis=1)
        j, l, m = j[ok], l[ok], m[ok]
        n = lattice.flat_index(s[ok])
        det = omega[j] + omega[l] - omega[m] - omega[n]
        keep = np.abs(det) <= dw
        for key, arr in zip("jlmn", (j, l, m, n)):
            out[key].append(arr[keep])
    cols = {k: (np.concatenate(v) if v else np.zeros(0, np.int64)) for k, v in out.items()}
    det = omega[cols["j"]] + omega[cols["l"]] - omega[cols["m"]] - omega[cols["n"]]
    return QuartetSet(lattice, omega, det, **cols)
