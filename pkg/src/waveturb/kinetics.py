"""Collision rates and the kinetic equation ``dn/dt = -gamma n + eta``.

Rates are sums over a resonance set with a broadened frequency delta.  For an
ordered triad ``(p; q, r)`` with ``k_p = k_q + k_r`` and weight
``w = eps^2 |V^p_qr|^2 delta_D(w^p_qr)`` the three-wave contributions are

    eta_p   += 4 pi w n_q n_r          gamma_p += 8 pi w n_r
    eta_q   += 8 pi w n_r n_p          gamma_q += 8 pi w (n_r - n_p)

and for an ordered quartet ``(j, l; m, n)``

    eta_j   += 4 pi w n_l n_m n_n      gamma_j += 4 pi w (n_l (n_m + n_n) - n_m n_n).

Sums carry a lattice measure: ``'continuum'`` multiplies by ``(2 pi/L)^d``
per free wavevector, ``'discrete'`` leaves plain mode sums (the two agree
when ``L = 2 pi``).
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .dynamics import _self_coupling
from .lattice import QuartetSet, TriadSet
from .systems import WaveSystem

__all__ = [
    "KineticState",
    "broadened_delta",
    "collision_rates_3w",
    "collision_rates_4w",
    "collision_rates",
    "triad_rates",
    "quartet_rates",
    "kinetic_rhs",
    "step_kinetic",
    "frequency_shift_spectrum",
    "thermodynamic_spectrum",
    "energy",
    "waveaction_total",
]

KERNELS = ("triangular", "lorentzian", "fejer")


def broadened_delta(x, width: float, kernel: str = "triangular") -> np.ndarray:
    """Unit-integral approximation of ``delta(x)``.

    ``'triangular'`` has half-width ``width``; ``'lorentzian'`` has half-width
    at half-maximum ``width``; ``'fejer'`` is ``(1 - cos xT)/(pi T x^2)`` with
    ``T = 2 pi / width``, the kernel ``|Delta(x)|^2 / (2 pi T)`` produced by a
    finite observation window.
    """
    x = np.asarray(x, dtype=float)
    if not width > 0:
        raise ValueError("kernel width must be positive")
    if kernel == "triangular":
        return np.maximum(0.0, 1 - np.abs(x) / width) / width
    if kernel == "lorentzian":
        return width / np.pi / (x * x + width * width)
    if kernel == "fejer":
        T = 2 * np.pi / width
        # (1 - cos xT)/(pi T x^2) = (T/2pi) sinc^2(xT/2pi)
        return T / (2 * np.pi) * np.sinc(x * T / (2 * np.pi)) ** 2
    raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


@dataclass(frozen=True)
class KineticState:
    """Spectrum and rates at one time."""

    n: np.ndarray
    eta: np.ndarray
    gamma: np.ndarray
    gamma_tilde: Optional[np.ndarray] = None
    time: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.n, dtype=float)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "eta", np.asarray(self.eta, dtype=float))
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))
        gt = np.zeros_like(n) if self.gamma_tilde is None else np.asarray(self.gamma_tilde, dtype=float)
        object.__setattr__(self, "gamma_tilde", gt)

    @property
    def gamma_eff(self) -> np.ndarray:
        return self.gamma - self.gamma_tilde


def _measure(lattice, free: int, measure: str) -> float:
    if measure == "discrete":
        return 1.0
    if measure == "continuum":
        return (2 * np.pi / lattice.L) ** (lattice.d * free)
    raise ValueError(f"unknown measure {measure!r}")


@functools.lru_cache(maxsize=32)
def _triad_weights(system: WaveSystem, rset: TriadSet):
    k = rset.lattice.wavevectors
    V = system.coupling3(k[rset.j], k[rset.m], k[rset.n])
    out = np.abs(V) ** 2
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=32)
def _quartet_weights(system: WaveSystem, rset: QuartetSet):
    k = rset.lattice.wavevectors
    W = system.coupling4(k[rset.j], k[rset.l], k[rset.m], k[rset.n])
    out = np.abs(W) ** 2
    out.setflags(write=False)
    return out


def _check(rset, dw, kernel):
    if len(rset) == 0:
        warnings.warn("resonance set is empty; all rates vanish", RuntimeWarning, stacklevel=3)
    if not dw > 0:
        raise ValueError("a broadened delta needs dw > 0")
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")


def triad_rates(n, p, q, r, weight, N: int):
    """Three-wave rates from per-triad weights ``eps^2 |V|^2 delta(w)`` (measure included).

    ``(p, q, r)`` index ordered triads ``k_p = k_q + k_r``; both orderings of
    ``(q, r)`` should be present.
    """
    n = np.asarray(n, dtype=float)
    w = 4 * np.pi * np.asarray(weight, dtype=float)
    eta = np.bincount(p, w * n[q] * n[r], N) + np.bincount(q, 2 * w * n[r] * n[p], N)
    gamma = np.bincount(p, 2 * w * n[r], N) + np.bincount(q, 2 * w * (n[r] - n[p]), N)
    return eta, gamma


def quartet_rates(n, j, l, m, nn, weight, N: int):
    """Four-wave rates from per-quartet weights ``eps^2 |W|^2 delta(w)``."""
    n = np.asarray(n, dtype=float)
    w = 4 * np.pi * np.asarray(weight, dtype=float)
    eta = np.bincount(j, w * n[l] * n[m] * n[nn], N)
    gamma = np.bincount(j, w * (n[l] * (n[m] + n[nn]) - n[m] * n[nn]), N)
    return eta, gamma


def collision_rates_3w(n, system: WaveSystem, triads: TriadSet, dw: float,
                       kernel: str = "triangular", measure: str = "continuum"):
    """Three-wave ``(eta, gamma)`` for spectrum ``n`` on a triad set.

    ``dw`` is the kernel width.  With a compact kernel the triad set should
    be built with broadening at least ``dw``.
    """
    if system.order != 3:
        raise TypeError("collision_rates_3w requires a three-wave system")
    _check(triads, dw, kernel)
    n = np.asarray(n, dtype=float)
    N = triads.lattice.N
    w = (system.epsilon**2 * _measure(triads.lattice, 1, measure)
         * _triad_weights(system, triads) * broadened_delta(triads.detuning, dw, kernel))
    return triad_rates(n, triads.j, triads.m, triads.n, w, N)


def collision_rates_4w(n, system: WaveSystem, quartets: QuartetSet, dw: float,
                       kernel: str = "triangular", measure: str = "continuum"):
    """Four-wave ``(eta, gamma)`` for spectrum ``n`` on a quartet set."""
    if system.order != 4:
        raise TypeError("collision_rates_4w requires a four-wave system")
    _check(quartets, dw, kernel)
    n = np.asarray(n, dtype=float)
    N = quartets.lattice.N
    w = (system.epsilon**2 * _measure(quartets.lattice, 2, measure)
         * _quartet_weights(system, quartets) * broadened_delta(quartets.detuning, dw, kernel))
    return quartet_rates(n, quartets.j, quartets.l, quartets.m, quartets.n, w, N)


def collision_rates(n, system, rset, dw, kernel="triangular", measure="continuum"):
    if isinstance(rset, TriadSet):
        return collision_rates_3w(n, system, rset, dw, kernel, measure)
    return collision_rates_4w(n, system, rset, dw, kernel, measure)


def kinetic_rhs(n, eta, gamma):
    """``-gamma n + eta``."""
    return -gamma * n + eta


def step_kinetic(state: KineticState, system: WaveSystem, rset, dt: float, dw: Optional[float] = None,
                 kernel: str = "triangular", measure: str = "continuum",
                 rates: Optional[Callable] = None, neg_tol: float = 1e-12) -> KineticState:
    """One explicit Euler step of ``dn/dt = -(gamma - gamma_tilde) n + eta``.

    The step uses the rates stored in ``state``; rates for the new spectrum
    are then refreshed by ``rates(n)`` if given, otherwise by the collision
    integrals with width ``dw``.
    """
    g = state.gamma_eff
    gmax = float(np.max(g)) if g.size else 0.0
    if gmax > 0 and dt > 0.1 / gmax * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds the explicit stability bound 0.1/max(gamma - gamma_tilde)"
                         f" = {0.1 / gmax:.3g}")
    n_new = state.n + dt * kinetic_rhs(state.n, state.eta, g)
    floor = -neg_tol * max(float(np.max(np.abs(state.n))), 1.0)
    if np.any(n_new < floor):
        raise FloatingPointError(f"kinetic step produced negative spectrum (min {n_new.min():.3g})")
    n_new = np.maximum(n_new, 0.0)
    if rates is None:
        if dw is None:
            raise ValueError("step_kinetic needs dw or a rates callable to refresh the rates")
        rates = functools.partial(collision_rates, system=system, rset=rset, dw=dw,
                                  kernel=kernel, measure=measure)
    eta, gamma = rates(n_new)
    return replace(state, n=n_new, eta=eta, gamma=gamma, time=state.time + dt)


def frequency_shift_spectrum(n, system: WaveSystem, lattice) -> np.ndarray:
    """``Omega_l = 2 eps sum_mu W^{l mu}_{l mu} n_mu``."""
    if system.order != 4:
        raise TypeError("frequency shift is defined for four-wave systems")
    W = _self_coupling(lattice, system).real
    return 2 * system.epsilon * (W @ np.asarray(n, dtype=float))


def thermodynamic_spectrum(omega, T_eq: float = 1.0, mu: float = 0.0) -> np.ndarray:
    """Rayleigh-Jeans ``T/(omega + mu)``; zero where the denominator vanishes."""
    omega = np.asarray(omega, dtype=float) + mu
    return np.divide(T_eq, omega, out=np.zeros_like(omega), where=omega != 0)


def energy(n, omega) -> float:
    return float(np.sum(np.asarray(omega) * np.asarray(n)))


def waveaction_total(n) -> float:
    return float(np.sum(n))
