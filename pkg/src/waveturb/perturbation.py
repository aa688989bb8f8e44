"""Weak-nonlinearity expansion: time kernels and first/second iterates.

Writing the equation of motion as ``da/dt = -i eps sum_t C_t P_t(a) exp(i theta_t t)``
(see :mod:`waveturb.dynamics`), Picard iteration from ``a(0) = a0`` gives

    a1_l = -i sum_{t -> l} C_t P_t(a0) Delta(theta_t)

    a2_l = sum_{t -> l} sum_{f in t} sum_{s -> f}
              -C_t C_s P_{t\\f} P_s E(theta_t + theta_s, theta_t)     (f plain)
              +C_t conj(C_s) P_{t\\f} conj(P_s) E(theta_t - theta_s, theta_t)   (f conjugated)

where ``P_{t\\f}`` is the factor product with ``f`` removed.  For the three-wave
families this is the six-term second iterate; for four-wave systems the
``-Omega a`` counter-term is one more family (with ``theta = 0``), which
produces the ``-Omega^2 a T^2/2`` and ``int tau exp(i w~ tau)`` pieces.
"""

from __future__ import annotations

import warnings
from typing import Optional

import numpy as np

from .dynamics import FrequencyShift, WaveField, frequency_shift, interaction
from .systems import WaveSystem

__all__ = [
    "delta_kernel",
    "e_kernel",
    "first_iterate",
    "second_iterate",
    "first_iterate_3w",
    "second_iterate_3w",
    "first_iterate_4w",
    "second_iterate_4w",
    "check_time_separation",
]

# below this |(x - y) T| the divided difference in E switches to its Taylor form
_SERIES_THRESHOLD = 1e-4


def delta_kernel(x, T: float) -> np.ndarray:
    """``Delta(x) = int_0^T exp(i x t) dt``; equals ``T`` at ``x = 0``."""
    if not T > 0:
        raise ValueError("T must be positive")
    x = np.asarray(x, dtype=float)
    return T * np.exp(0.5j * x * T) * np.sinc(x * T / (2 * np.pi))


def _moment_integrals(c, kmax: int) -> list:
    """``I_k(c) = int_0^1 s^k exp(i c s) ds`` for ``k = 0..kmax``."""
    c = np.asarray(c, dtype=float)
    out = [np.zeros(c.shape, dtype=complex) for _ in range(kmax + 1)]
    small = np.abs(c) < 4.0
    if np.any(small):
        z = 1j * c[small]
        for k in range(kmax + 1):
            term = np.ones(z.shape, dtype=complex)
            acc = term / (k + 1)
            for n in range(1, 60):
                term = term * z / n
                acc = acc + term / (n + k + 1)
            out[k][small] = acc
    big = ~small
    if np.any(big):
        z = 1j * c[big]
        ez = np.exp(z)
        prev = (ez - 1) / z
        out[0][big] = prev
        for k in range(1, kmax + 1):
            prev = (ez - k * prev) / z
            out[k][big] = prev
    return out


def e_kernel(x, y, T: float) -> np.ndarray:
    """``E(x, y) = int_0^T Delta_t(x - y) exp(i y t) dt`` with ``Delta_t`` the
    running-time kernel.

    In scaled variables ``a = xT``, ``b = yT`` this is ``T^2 (g(a) - g(b)) / (i(a - b))``
    with ``g(u) = (exp(iu) - 1)/(iu)``; near ``a = b`` a Taylor expansion of the
    divided difference about the midpoint is used instead.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    a = x * T
    b = y * T
    h = a - b
    out = np.empty(a.shape, dtype=complex)
    near = np.abs(h) < _SERIES_THRESHOLD
    far = ~near
    if np.any(far):
        af, bf = a[far], b[far]
        ga = np.exp(0.5j * af) * np.sinc(af / (2 * np.pi))
        gb = np.exp(0.5j * bf) * np.sinc(bf / (2 * np.pi))
        out[far] = (ga - gb) / (1j * (af - bf))
    if np.any(near):
        c = 0.5 * (a[near] + b[near])
        hn = h[near]
        I = _moment_integrals(c, 5)
        out[near] = I[1] - I[3] * hn**2 / 24 + I[5] * hn**4 / 1920
    return T * T * out


def check_time_separation(omega_max: float, T: float) -> bool:
    """Warn unless ``2 pi / omega_max << T``; returns whether the check passed."""
    ok = omega_max > 0 and 2 * np.pi / omega_max < 0.1 * T
    if not ok:
        warnings.warn(f"T={T} does not separate from the linear period 2pi/omega_max "
                      f"= {2 * np.pi / omega_max if omega_max else np.inf:.3g}",
                      RuntimeWarning, stacklevel=2)
    return ok


def _families(field0, system, rset, shift):
    if field0.time != 0:
        raise ValueError("iterates expand about the t=0 state; field0.time must be 0")
    inter = interaction(system, field0.lattice, rset)
    if inter.order == 4 and shift is None:
        shift = frequency_shift(field0, system)
    return inter.families(shift)


def first_iterate(field0: WaveField, system: WaveSystem, rset=None,
                  shift: Optional[FrequencyShift] = None, T: float = 1.0) -> WaveField:
    """First iterate ``a^(1)(T)`` for either interaction order."""
    a0 = field0.amplitudes
    out = np.zeros_like(a0)
    for fam in _families(field0, system, rset, shift):
        out += fam.gather(fam.coef * fam.product(a0) * delta_kernel(fam.theta, T))
    return field0.replace(amplitudes=-1j * out, time=T)


def second_iterate(field0: WaveField, system: WaveSystem, rset=None,
                   shift: Optional[FrequencyShift] = None, T: float = 1.0) -> WaveField:
    """Second iterate ``a^(2)(T)`` for either interaction order."""
    a0 = field0.amplitudes
    if a0.ndim != 1:
        raise ValueError("second_iterate expects a single realization")
    fams = _families(field0, system, rset, shift)
    N = field0.lattice.N
    # all terms flattened: target, weight C_s P_s(a0), phase frequency
    s_target = np.concatenate([f.target for f in fams])
    s_weight = np.concatenate([np.broadcast_to(f.coef, f.target.shape) * f.product(a0) for f in fams])
    s_theta = np.concatenate([np.broadcast_to(f.theta, f.target.shape) for f in fams])
    order = np.argsort(s_target, kind="stable")
    counts = np.bincount(s_target, minlength=N)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    out = np.zeros(N, dtype=complex)
    for fam in fams:
        coef = np.broadcast_to(fam.coef, fam.target.shape)
        theta = np.broadcast_to(fam.theta, fam.target.shape)
        for pos, conj in enumerate(fam.conj):
            f = fam.factors[:, pos]
            rest = coef * fam.product(a0, skip=pos)
            n_pair = counts[f]
            t_idx = np.repeat(np.arange(len(f)), n_pair)
            offs = np.arange(t_idx.size) - np.repeat(np.cumsum(n_pair) - n_pair, n_pair)
            s_idx = order[np.repeat(starts[f], n_pair) + offs]
            th_t = theta[t_idx]
            if conj:
                vals = rest[t_idx] * np.conj(s_weight[s_idx]) * e_kernel(th_t - s_theta[s_idx], th_t, T)
            else:
                vals = -rest[t_idx] * s_weight[s_idx] * e_kernel(th_t + s_theta[s_idx], th_t, T)
            out += np.bincount(fam.target[t_idx], weights=vals.real, minlength=N) \
                + 1j * np.bincount(fam.target[t_idx], weights=vals.imag, minlength=N)
    return field0.replace(amplitudes=out, time=T)


def first_iterate_3w(field0, system, triads=None, T=1.0) -> WaveField:
    if system.order != 3:
        raise TypeError("first_iterate_3w requires a three-wave system")
    return first_iterate(field0, system, triads, None, T)


def second_iterate_3w(field0, system, triads=None, T=1.0) -> WaveField:
    if system.order != 3:
        raise TypeError("second_iterate_3w requires a three-wave system")
    return second_iterate(field0, system, triads, None, T)


def first_iterate_4w(field0, system, quartets=None, shift=None, T=1.0) -> WaveField:
    """First iterate including the ``+i Omega_l a_l T / eps`` counter-term.

    The counter-term enters at the same order as the quartic sum because
    ``Omega`` itself carries one power of ``eps``.
    """
    if system.order != 4:
        raise TypeError("first_iterate_4w requires a four-wave system")
    return first_iterate(field0, system, quartets, shift, T)


def second_iterate_4w(field0, system, quartets=None, shift=None, T=1.0) -> WaveField:
    if system.order != 4:
        raise TypeError("second_iterate_4w requires a four-wave system")
    return second_iterate(field0, system, quartets, shift, T)

