"""Exponential integral ``Ei`` for real arguments.

``Ei(x) = -E1(-x)`` for ``x < 0``.  Positive arguments use the power series
up to ``x = 40`` and the asymptotic expansion beyond; negative arguments use
the ``E1`` series for ``|x| <= 1`` and a modified-Lentz continued fraction
otherwise.  :func:`eix` returns the overflow-safe ``exp(-x) Ei(x)``.
"""

import numpy as np

__all__ = ["ei", "eix", "EULER_GAMMA"]

EULER_GAMMA = 0.57721566490153286061

_TINY = 1e-300
_EPS = 1e-17


def _ei_series(x):
    # Ei(x) = gamma + ln x + sum x^k / (k k!), x > 0; all terms positive
    term = np.ones_like(x)
    acc = np.zeros_like(x)
    for k in range(1, 400):
        term = term * x / k
        inc = term / k
        acc = acc + inc
        if np.all(inc <= _EPS * acc):
            break
    return EULER_GAMMA + np.log(x) + acc


def _eix_asymptotic(x):
    # exp(-x) Ei(x) ~ (1/x) sum k!/x^k, truncated at the smallest term
    term = np.ones_like(x)
    acc = np.ones_like(x)
    live = np.ones(x.shape, dtype=bool)
    for k in range(1, 60):
        nxt = term * k / x
        live &= nxt < term
        term = np.where(live, nxt, term)
        acc = acc + np.where(live, nxt, 0.0)
        if not np.any(live & (nxt > _EPS * acc)):
            break
    return acc / x


def _e1_series(z):
    # E1(z) = -gamma - ln z - sum (-z)^k / (k k!), 0 < z <= 1
    term = np.ones_like(z)
    acc = np.zeros_like(z)
    for k in range(1, 60):
        term = -term * z / k
        acc = acc + term / k
    return -EULER_GAMMA - np.log(z) - acc


def _e1x_fraction(z):
    # exp(z) E1(z) by modified Lentz, z > 1
    b = z + 1.0
    c = np.full_like(z, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, 400):
        an = -float(i * i)
        b = b + 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) < 1e-16):
            break
    return h


def eix(x):
    """``exp(-x) Ei(x)``; finite for all real ``x != 0``."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    flat_x = x.ravel()
    flat = out.ravel()
    pos_small = (flat_x > 0) & (flat_x <= 40)
    pos_big = flat_x > 40
    neg_small = (flat_x < 0) & (flat_x >= -1)
    neg_big = flat_x < -1
    if np.any(pos_small):
        xs = flat_x[pos_small]
        flat[pos_small] = np.exp(-xs) * _ei_series(xs)
    if np.any(pos_big):
        flat[pos_big] = _eix_asymptotic(flat_x[pos_big])
    if np.any(neg_small):
        z = -flat_x[neg_small]
        flat[neg_small] = -np.exp(-flat_x[neg_small]) * _e1_series(z)
    if np.any(neg_big):
        # exp(-x) Ei(x) = -exp(z) E1(z) with z = -x
        flat[neg_big] = -_e1x_fraction(-flat_x[neg_big])
    flat[flat_x == 0] = -np.inf
    flat[np.isnan(flat_x)] = np.nan
    return flat.reshape(x.shape)


def ei(x):
    """Exponential integral ``Ei(x)`` (principal value for ``x > 0``)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        return np.where(x == 0, -np.inf, eix(x) * np.exp(x))
