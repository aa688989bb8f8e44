"""Direct integration of the interaction-representation equations of motion.

Three-wave systems evolve by

    i da_l/dt = eps * sum V^l_mn a_m a_n exp(i w^l_mn t) delta^l_{m+n}
              + 2 eps * sum conj(V^m_ln) conj(a_n) a_m exp(-i w^m_ln t) delta^m_{l+n}

and four-wave systems by

    i da_l/dt = eps * sum W^{la}_{mn} conj(a_a) a_m a_n exp(i w~ t) delta - Omega_l a_l

with the self-interaction shift ``Omega_l = 2 eps sum_mu W^{l mu}_{l mu} |a_mu|^2``
and ``w~`` the shifted detuning.  Both are written as sums of *terms*

    i da_target/dt += eps * C * prod(factors) * exp(i theta t)

grouped into :class:`TermFamily` objects; the perturbation module iterates
the same representation.  Amplitude arrays may carry leading batch axes, so a
whole ensemble advances in one call.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .lattice import FourierLattice, QuartetSet, TriadSet, find_quartets, find_triads
from .systems import WaveSystem

__all__ = [
    "WaveField",
    "FrequencyShift",
    "BlowUpError",
    "TermFamily",
    "Interaction",
    "frequency_shift",
    "interaction",
    "rhs_three_wave",
    "rhs_four_wave",
    "integrate",
    "hamiltonian",
    "waveaction",
]


class BlowUpError(FloatingPointError):
    """Raised when amplitudes become non-finite during integration."""


@dataclass(frozen=True)
class WaveField:
    """Mode amplitudes ``a_l`` in the interaction representation.

    ``amplitudes`` has shape ``(N,)`` or ``(..., N)`` for a batch of
    independent realizations sharing one lattice and one time.
    """

    lattice: FourierLattice
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape[-1:] != (self.lattice.N,):
            raise ValueError(f"expected {self.lattice.N} amplitudes per realization, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise BlowUpError("wave field contains non-finite amplitudes")
        object.__setattr__(self, "amplitudes", a)

    @property
    def A(self) -> np.ndarray:
        return np.abs(self.amplitudes)

    @property
    def psi(self) -> np.ndarray:
        """Phase factors ``a/|a|`` (zero where the amplitude vanishes)."""
        A = self.A
        return np.divide(self.amplitudes, A, out=np.zeros_like(self.amplitudes), where=A > 0)

    def replace(self, amplitudes=None, time=None) -> "WaveField":
        return WaveField(self.lattice,
                         self.amplitudes if amplitudes is None else amplitudes,
                         self.time if time is None else time)


@dataclass(frozen=True)
class FrequencyShift:
    """Per-mode nonlinear frequency shift ``Omega_l`` (leading batch axes allowed)."""

    omega: np.ndarray


@functools.lru_cache(maxsize=32)
def _self_coupling(lattice: FourierLattice, system: WaveSystem) -> np.ndarray:
    # W^{l mu}_{l mu} as an N x N matrix
    k = lattice.wavevectors
    kl = k[:, None, :]
    kmu = k[None, :, :]
    W = system.coupling4(kl, kmu, kl, kmu)
    W.setflags(write=False)
    return W


def frequency_shift(field: WaveField, system: WaveSystem) -> FrequencyShift:
    """``Omega_l = 2 eps sum_mu W^{l mu}_{l mu} |a_mu|^2`` from current amplitudes."""
    if system.order != 4:
        raise TypeError("frequency shift is defined for four-wave systems")
    W = _self_coupling(field.lattice, system).real
    return FrequencyShift(2 * system.epsilon * (np.abs(field.amplitudes) ** 2) @ W.T)


@dataclass
class TermFamily:
    """Terms ``i da_target/dt += eps * coef * prod(factors) * exp(i theta t)``.

    ``factors`` is an ``(nt, k)`` index array and ``conj`` flags which factor
    positions enter conjugated.  ``coef`` and ``theta`` may carry leading
    batch axes matching the amplitudes.
    """

    target: np.ndarray
    coef: np.ndarray
    theta: np.ndarray
    factors: np.ndarray
    conj: tuple
    n_modes: int
    _scatter: Optional[sp.csr_matrix] = field(default=None, repr=False)
    _order: Optional[np.ndarray] = field(default=None, repr=False)
    _indptr: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self):
        return len(self.target)

    @property
    def scatter(self) -> sp.csr_matrix:
        if self._scatter is None:
            nt = len(self.target)
            self._scatter = sp.csr_matrix(
                (np.ones(nt), (self.target, np.arange(nt))), shape=(self.n_modes, nt))
        return self._scatter

    def product(self, a, skip: Optional[int] = None) -> np.ndarray:
        """Product of the factor amplitudes, optionally leaving out one position."""
        out = None
        for pos, c in enumerate(self.conj):
            if pos == skip:
                continue
            x = a[..., self.factors[:, pos]]
            if c:
                x = np.conj(x)
            out = x if out is None else out * x
        if out is None:
            out = np.ones(a.shape[:-1] + (len(self.target),), dtype=complex)
        return out

    def gather(self, values) -> np.ndarray:
        """Sum per-term ``values`` (shape ``(..., nt)``) onto their target modes."""
        values = np.asarray(values)
        if values.ndim == 1:
            return self.scatter @ values
        flat = values.reshape(-1, values.shape[-1])
        return np.asarray((self.scatter @ flat.T).T).reshape(values.shape[:-1] + (self.n_modes,))

    def _weighted_scatter(self, w) -> sp.csr_matrix:
        # scatter matrix with per-term weights, built without re-sorting
        if self._order is None:
            self._order = np.argsort(self.target, kind="stable")
            self._indptr = np.concatenate([[0], np.cumsum(np.bincount(self.target, minlength=self.n_modes))])
        return sp.csr_matrix((w[self._order], self._order, self._indptr),
                             shape=(self.n_modes, len(self.target)))

    def apply_modes(self, aT, t) -> np.ndarray:
        """``sum coef prod exp(i theta t)`` per target for mode-major amplitudes ``(N, R)``."""
        prod = aT[self.factors[:, 0]]
        if self.conj[0]:
            np.conj(prod, out=prod)
        for pos in range(1, len(self.conj)):
            x = aT[self.factors[:, pos]]
            if self.conj[pos]:
                np.conj(x, out=x)
            prod *= x
        w = self.coef * np.exp(1j * self.theta * t)
        if w.ndim == 1:
            return self._weighted_scatter(w) @ prod
        prod *= w.T
        return self.scatter @ prod


class Interaction:
    """Static interaction data of a system on a resonance set.

    Parameters
    ----------
    system : WaveSystem
    rset : TriadSet or QuartetSet
        Usually built with infinite broadening so every momentum-conserving
        tuple takes part; detunings enter through the phase factors.
    """

    def __init__(self, system: WaveSystem, rset):
        self.system = system
        self.rset = rset
        self.lattice = rset.lattice
        k = self.lattice.wavevectors
        N = self.lattice.N
        if isinstance(rset, TriadSet):
            if system.order != 3:
                raise TypeError("triad set given for a four-wave system")
            self.order = 3
            self.V = system.coupling3(k[rset.j], k[rset.m], k[rset.n])
            det = rset.detuning
            fac_a = np.stack([rset.m, rset.n], axis=1)
            fac_b = np.stack([rset.j, rset.n], axis=1)
            self._static = [
                TermFamily(rset.j, self.V, det, fac_a, (False, False), N),
                TermFamily(rset.m, 2 * np.conj(self.V), -det, fac_b, (False, True), N),
            ]
            self._dynamic = [self._merged_pairs(), self._static[1]]
        elif isinstance(rset, QuartetSet):
            if system.order != 4:
                raise TypeError("quartet set given for a three-wave system")
            self.order = 4
            self.W = system.coupling4(k[rset.j], k[rset.l], k[rset.m], k[rset.n])
            self._quartet = TermFamily(rset.j, self.W, rset.detuning,
                                       np.stack([rset.l, rset.m, rset.n], axis=1),
                                       (True, False, False), N)
            modes = np.arange(N)
            self._linear = TermFamily(modes, np.zeros(N), np.zeros(N), modes[:, None], (False,), N)
            for fam in (self._quartet, self._linear):
                fam.scatter, fam._weighted_scatter(np.zeros(len(fam)))
        else:
            raise TypeError(f"unsupported resonance set {type(rset).__name__}")

    def _merged_pairs(self) -> TermFamily:
        # when V^j_mn = V^j_nm the (m, n) and (n, m) terms are merged into one
        r, N = self.rset, self.lattice.N
        key = (r.j * N + r.m) * N + r.n
        partner = (r.j * N + r.n) * N + r.m
        order = np.argsort(key)
        pos = order[np.searchsorted(key, partner, sorter=order)]
        if not np.allclose(self.V[pos], self.V, rtol=1e-13, atol=0):
            return self._static[0]
        keep = r.m <= r.n
        coef = np.where(r.m < r.n, 2.0, 1.0)[keep] * self.V[keep]
        return TermFamily(r.j[keep], coef, r.detuning[keep],
                          np.stack([r.m[keep], r.n[keep]], axis=1), (False, False), N)

    def families(self, shift: Optional[FrequencyShift] = None) -> list:
        """Term families; four-wave families include the ``-Omega a`` counter-term."""
        if self.order == 3:
            return self._static
        if shift is None:
            raise ValueError("four-wave dynamics needs a frequency shift")
        Om = np.asarray(shift.omega, dtype=float)
        r = self.rset
        theta = r.detuning + Om[..., r.j] + Om[..., r.l] - Om[..., r.m] - Om[..., r.n]
        return [replace(self._quartet, theta=theta),
                replace(self._linear, coef=-Om / self.system.epsilon)]

    def rhs_modes(self, aT, t, shift=None) -> np.ndarray:
        """``da/dt`` for mode-major amplitudes of shape ``(N, R)``."""
        fams = self._dynamic if self.order == 3 else self.families(shift)
        out = fams[0].apply_modes(aT, t)
        for fam in fams[1:]:
            out += fam.apply_modes(aT, t)
        out *= -1j * self.system.epsilon
        return out

    def rhs(self, a, t, shift=None) -> np.ndarray:
        """``da/dt`` for amplitudes ``a`` of shape ``(..., N)`` at time ``t``."""
        a = np.asarray(a, dtype=complex)
        N = self.lattice.N
        aT = a.reshape(-1, N).T
        if shift is not None and np.ndim(shift.omega) > 1:
            shift = FrequencyShift(np.reshape(shift.omega, (-1, N)))
        return self.rhs_modes(aT, t, shift).T.reshape(a.shape)


def interaction(system: WaveSystem, lattice: FourierLattice, rset=None) -> Interaction:
    """Interaction over all momentum-conserving tuples unless ``rset`` is given."""
    if rset is None:
        if system.order == 3:
            rset = find_triads(lattice, system, np.inf)
        elif system.order == 4:
            rset = find_quartets(lattice, system, np.inf)
        else:
            raise TypeError(f"system {system.kind!r} has no interaction coefficients")
    return _interaction_cached(system, rset)


@functools.lru_cache(maxsize=16)
def _interaction_cached(system, rset):
    return Interaction(system, rset)


def rhs_three_wave(field: WaveField, system: WaveSystem, triads: Optional[TriadSet] = None) -> WaveField:
    """Time derivative of a three-wave field, returned as a field at the same time."""
    if system.order != 3:
        raise TypeError("rhs_three_wave requires a three-wave system")
    inter = interaction(system, field.lattice, triads)
    return field.replace(amplitudes=inter.rhs(field.amplitudes, field.time))


def rhs_four_wave(field: WaveField, system: WaveSystem, quartets: Optional[QuartetSet] = None,
                  shift: Optional[FrequencyShift] = None) -> WaveField:
    """Time derivative of a four-wave field including the ``-Omega a`` term.

    ``shift`` defaults to the value computed from the field itself.
    """
    if system.order != 4:
        raise TypeError("rhs_four_wave requires a four-wave system")
    inter = interaction(system, field.lattice, quartets)
    if shift is None:
        shift = frequency_shift(field, system)
    return field.replace(amplitudes=inter.rhs(field.amplitudes, field.time, shift))


def _max_frequency(lattice, system):
    return float(np.max(np.abs(system.dispersion(lattice.wavevectors))))


def integrate(field: WaveField, system: WaveSystem, T: float, dt: float, rset=None,
              shift_policy: str = "step", sample_every: Optional[int] = None,
              check_dt: bool = True):
    """Advance ``field`` by time ``T`` with classical fixed-step RK4.

    Parameters
    ----------
    field : WaveField
    system : WaveSystem
    T, dt : float
        Horizon and requested step.  The step is shortened so that an integer
        number of steps lands exactly on ``T``.
    rset : TriadSet or QuartetSet, optional
        Defaults to all momentum-conserving tuples.
    shift_policy : {'step', 'frozen'}
        Four-wave only.  'step' recomputes ``Omega`` from the amplitudes at
        the start of every step; 'frozen' keeps the value of the initial
        field, which makes the shifted equation exactly Hamiltonian.
    sample_every : int, optional
        Record ``(times, amplitudes)`` every that many steps.

    Returns
    -------
    WaveField, or ``(WaveField, (times, amplitudes))`` when sampling.
    """
    if T < 0:
        raise ValueError("integration horizon must be nonnegative")
    if not dt > 0:
        raise ValueError("time step must be positive")
    if shift_policy not in ("step", "frozen"):
        raise ValueError(f"unknown shift policy {shift_policy!r}")
    if check_dt:
        wmax = _max_frequency(field.lattice, system)
        if wmax > 0 and dt > 2 * np.pi / wmax / 20 * (1 + 1e-12):
            raise ValueError(f"dt={dt} does not resolve the fastest linear period "
                             f"(need dt <= {2 * np.pi / wmax / 20:.3g})")
    inter = interaction(system, field.lattice, rset)
    nsteps = int(np.ceil(T / dt - 1e-9)) if T > 0 else 0
    h = T / nsteps if nsteps else 0.0
    N = field.lattice.N
    shape = field.amplitudes.shape
    a = field.amplitudes.reshape(-1, N).T.copy()
    t0 = field.time
    shift = None
    if inter.order == 4:
        W = 2 * system.epsilon * _self_coupling(field.lattice, system).real
        shift = FrequencyShift((W @ np.abs(a) ** 2).T)
    times, samples = [t0], [a.T.reshape(shape).copy()]
    for i in range(nsteps):
        t = t0 + i * h
        if inter.order == 4 and shift_policy == "step" and i > 0:
            shift = FrequencyShift((W @ np.abs(a) ** 2).T)
        k1 = inter.rhs_modes(a, t, shift)
        k2 = inter.rhs_modes(a + 0.5 * h * k1, t + 0.5 * h, shift)
        k3 = inter.rhs_modes(a + 0.5 * h * k2, t + 0.5 * h, shift)
        k4 = inter.rhs_modes(a + h * k3, t + h, shift)
        k2 += k3
        k2 *= 2
        k1 += k2
        k1 += k4
        a += (h / 6) * k1
        if not np.all(np.isfinite(a)):
            raise BlowUpError(f"amplitudes became non-finite at t={t + h:.6g} (step {i + 1}); "
                              f"max |a| before the step was {np.max(np.abs(samples[-1])):.3g}")
        if sample_every and (i + 1) % sample_every == 0:
            times.append(t + h)
            samples.append(a.T.reshape(shape).copy())
    a = a.T.reshape(shape)
    out = field.replace(amplitudes=a, time=t0 + T)
    if sample_every:
        return out, (np.array(times), np.array(samples))
    return out


def hamiltonian(field: WaveField, system: WaveSystem, rset=None,
                shift: Optional[FrequencyShift] = None) -> np.ndarray:
    """Energy ``H2 + H3`` or ``H2 + H4`` in canonical variables.

    With ``c_l = a_l exp(-i w_l t)`` the three-wave energy is
    ``sum w|c|^2 + eps sum (V conj(c_l) c_m c_n + c.c.)``.  In the four-wave
    case ``c_l`` also carries the phase ``exp(-i Omega_l t)`` and
    ``H4 = (eps/2) sum W conj(c_j) conj(c_l) c_m c_n``.
    """
    a = field.amplitudes
    omega = system.dispersion(field.lattice.wavevectors)
    H2 = np.sum(omega * np.abs(a) ** 2, axis=-1)
    if system.order not in (3, 4):
        return H2
    inter = interaction(system, field.lattice, rset)
    r = inter.rset
    t = field.time
    eps = system.epsilon
    if inter.order == 3:
        s = np.sum(inter.V * np.conj(a[..., r.j]) * a[..., r.m] * a[..., r.n]
                   * np.exp(1j * r.detuning * t), axis=-1)
        return H2 + 2 * eps * s.real
    if shift is None:
        shift = frequency_shift(field, system)
    fam = inter.families(shift)[0]
    s = np.sum(fam.coef * np.conj(a[..., r.j]) * fam.product(a) * np.exp(1j * fam.theta * t), axis=-1)
    return H2 + 0.5 * eps * s.real


def waveaction(field: WaveField) -> np.ndarray:
    return np.sum(np.abs(field.amplitudes) ** 2, axis=-1)
