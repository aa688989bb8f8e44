"""Random-phase ensembles and the statistical objects measured on them.

Fields are generated with i.i.d. phases uniform on the circle and
independent amplitudes drawn from an :class:`AmplitudeLaw`.  Each realization
has its own Philox stream keyed by ``(seed, realization)`` and consumed in mode
order, so any realization can be regenerated alone and ensembles can be split
across workers without shared state.

Moments are ``M^(p) = <A^(2p)>`` with ``A = |a|``; the phase factor is
``psi = a/|a|``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats as _st

from .dynamics import WaveField
from .lattice import FourierLattice
from .onemode import OneModePdf

__all__ = [
    "AmplitudeLaw",
    "EnsembleStats",
    "PhaseDiagnostics",
    "generate_rpa_field",
    "realization_rng",
    "ensemble_amplitudes",
    "estimate_moments",
    "estimate_one_mode_pdf",
    "ks_distance",
    "phase_diagnostics",
    "rayleigh_test",
    "distance_correlation",
    "amplitude_phase_independence",
    "phi_psi_example",
    "singular_cumulant",
    "rate_estimate",
]

LAWS = ("deterministic-level", "rayleigh", "user-tabulated")


@dataclass(frozen=True)
class AmplitudeLaw:
    """Per-mode law of the intensity ``s = A^2``.

    Parameters
    ----------
    kind : {'deterministic-level', 'rayleigh', 'user-tabulated'}
        ``s = n`` exactly, ``s/n`` standard exponential, or ``s/n`` drawn from
        the discrete law ``(values, weights)``.
    n : array_like
        Spectrum ``<s>`` per mode.
    values, weights : array_like, optional
        Tabulated law of ``s/n``; it is rescaled to unit mean.
    """

    kind: str
    n: np.ndarray
    values: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in LAWS:
            raise ValueError(f"unknown amplitude law {self.kind!r}; expected one of {LAWS}")
        n = np.asarray(self.n, dtype=float)
        if np.any(n < 0) or not np.all(np.isfinite(n)):
            raise ValueError("spectrum must be finite and nonnegative")
        object.__setattr__(self, "n", n)
        if self.kind == "user-tabulated":
            if self.values is None:
                raise ValueError("user-tabulated law needs values")
            v = np.asarray(self.values, dtype=float)
            w = np.ones_like(v) if self.weights is None else np.asarray(self.weights, dtype=float)
            if v.shape != w.shape or v.ndim != 1 or np.any(v < 0) or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("tabulated law needs matching nonnegative 1-D values and weights")
            w = w / w.sum()
            mean = float(v @ w)
            if mean <= 0:
                raise ValueError("tabulated law has zero mean")
            object.__setattr__(self, "values", v / mean)
            object.__setattr__(self, "weights", w)

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        """Intensities for every mode; ``size`` prepends batch axes."""
        shape = (() if size is None else tuple(np.atleast_1d(size))) + self.n.shape
        if self.kind == "deterministic-level":
            return np.broadcast_to(self.n, shape).copy()
        if self.kind == "rayleigh":
            return rng.standard_exponential(shape) * self.n
        idx = rng.choice(self.values.size, size=shape, p=self.weights)
        return self.values[idx] * self.n

    def moment(self, p: int) -> np.ndarray:
        """Exact ``<s^p>`` per mode."""
        if self.kind == "deterministic-level":
            return self.n**p
        if self.kind == "rayleigh":
            return float(np.prod(np.arange(1, p + 1))) * self.n**p
        return float(self.values**p @ self.weights) * self.n**p


def realization_rng(seed: int, realization: int) -> np.random.Generator:
    """Counter-based generator for one realization."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(realization)])))


def generate_rpa_field(lattice: FourierLattice, law: AmplitudeLaw, seed: int,
                       realizations=None, antithetic: bool = False) -> WaveField:
    """Random-phase-and-amplitude field.

    Parameters
    ----------
    lattice : FourierLattice
    law : AmplitudeLaw
        Its spectrum must have one entry per lattice mode.
    seed : int
    realizations : int or sequence of int, optional
        ``None`` gives the single realization 0 with shape ``(N,)``; an int
        ``R`` gives realizations ``0..R-1`` stacked as ``(R, N)``; a sequence
        selects realization indices explicitly.
    antithetic : bool
        Pair every drawn realization with its sign flip ``-a``.  Odd orders of
        the weak-nonlinearity expansion then cancel exactly in ensemble means
        of even quantities.  ``R`` must be even and realization ``r + R/2`` is
        the partner of ``r``.
    """
    if law.n.shape != (lattice.N,):
        raise ValueError(f"law has {law.n.size} modes, lattice has {lattice.N}")
    if realizations is None:
        ids, single = [0], True
    elif np.isscalar(realizations):
        R = int(realizations)
        if R < 1:
            raise ValueError("need at least one realization")
        if antithetic and R % 2:
            raise ValueError("antithetic ensembles need an even size")
        ids, single = list(range(R // 2 if antithetic else R)), False
    else:
        ids, single = [int(r) for r in realizations], False
        if antithetic:
            raise ValueError("antithetic pairing needs an integer ensemble size")
    out = np.empty((len(ids), lattice.N), dtype=complex)
    for i, r in enumerate(ids):
        rng = realization_rng(seed, r)
        phase = rng.random(lattice.N)
        s = law.sample(rng)
        out[i] = np.sqrt(s) * np.exp(2j * np.pi * phase)
    if antithetic:
        out = np.concatenate([out, -out])
    return WaveField(lattice, out[0] if single else out)


def ensemble_amplitudes(ensemble) -> np.ndarray:
    """Stack an ensemble into an ``(R, N)`` complex array."""
    if isinstance(ensemble, WaveField):
        a = ensemble.amplitudes
    elif isinstance(ensemble, np.ndarray):
        a = ensemble
    else:
        a = np.array([f.amplitudes if isinstance(f, WaveField) else f for f in ensemble])
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        a = a[None]
    if a.ndim != 2 or a.shape[0] == 0:
        raise ValueError("empty ensemble")
    return a


@dataclass(frozen=True)
class EnsembleStats:
    """Per-mode ensemble estimates with standard errors of the mean.

    ``M[p-1]`` holds ``M^(p)`` for ``p = 1..p_max``; ``psi_corr`` holds
    ``<psi_l conj(psi_m)>`` for the index pairs in ``pairs``.
    """

    R: int
    n: np.ndarray
    M: np.ndarray
    M_stderr: np.ndarray
    sigma: np.ndarray
    psi_mean: np.ndarray
    pairs: np.ndarray
    psi_corr: np.ndarray
    Q: np.ndarray
    Q_stderr: np.ndarray

    @property
    def p_max(self) -> int:
        return self.M.shape[0]

    def normalized_moments(self) -> np.ndarray:
        """``M^(p) / (p! n^p)``; equals one for a Gaussian field."""
        p = np.arange(1, self.p_max + 1)[:, None]
        fact = np.cumprod(np.arange(1, self.p_max + 1))[:, None]
        return np.divide(self.M, fact * self.n**p, out=np.full_like(self.M, np.nan), where=self.n > 0)


def _sample_pairs(N: int, max_full: int, n_sample: int, seed: int) -> np.ndarray:
    if N <= max_full:
        l, m = np.triu_indices(N, 1)
        return np.stack([l, m], axis=1)
    rng = np.random.default_rng([int(seed), N])
    l = rng.integers(0, N, n_sample)
    m = (l + rng.integers(1, N, n_sample)) % N
    return np.stack([l, m], axis=1)


def estimate_moments(ensemble, p_max: int = 4, max_full_pairs: int = 128,
                     n_pair_sample: int = 10_000, seed: int = 0) -> EnsembleStats:
    """Sample moments, r.m.s. fluctuation, phase means and singular cumulant."""
    a = ensemble_amplitudes(ensemble)
    R, N = a.shape
    if R < 2:
        raise ValueError("estimate_moments needs at least two realizations")
    if p_max < 1:
        raise ValueError("p_max must be at least 1")
    s = np.abs(a) ** 2
    powers = np.stack([s**p for p in range(1, p_max + 1)])
    M = powers.mean(axis=1)
    M_se = powers.std(axis=1, ddof=1) / np.sqrt(R)
    n = M[0]
    M2 = (s * s).mean(0)
    sigma = np.sqrt(np.maximum(M2 - n * n, 0.0))
    A = np.sqrt(s)
    psi = np.divide(a, A, out=np.zeros_like(a), where=A > 0)
    pairs = _sample_pairs(N, max_full_pairs, n_pair_sample, seed)
    corr = np.einsum("rk,rk->k", psi[:, pairs[:, 0]], np.conj(psi[:, pairs[:, 1]])) / R
    Q, Q_se = singular_cumulant(a)
    return EnsembleStats(R, n, M, M_se, sigma, psi.mean(0), pairs, corr, Q, Q_se)


def singular_cumulant(ensemble):
    """``Q = <A^4> - 2 <A^2>^2`` per mode with an influence-function standard error.

    Zero for a Gaussian field and ``-n^2`` for deterministic amplitudes.
    """
    a = ensemble_amplitudes(ensemble)
    R = a.shape[0]
    s = np.abs(a) ** 2
    m1 = s.mean(0)
    m2 = (s * s).mean(0)
    Q = m2 - 2 * m1 * m1
    if R < 2:
        return Q, np.full_like(Q, np.nan)
    infl = (s * s - m2) - 4 * m1 * (s - m1)
    return Q, infl.std(0, ddof=1) / np.sqrt(R)


def estimate_one_mode_pdf(ensemble, j: int, edges) -> OneModePdf:
    """Histogram estimate of the intensity density of mode ``j``.

    The density is normalized over the samples that fall inside ``edges``;
    the fraction outside and any undersampling are reported in ``meta``.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be strictly increasing")
    a = ensemble_amplitudes(ensemble)
    R = a.shape[0]
    s = np.abs(a[:, j]) ** 2
    counts, _ = np.histogram(s, bins=edges)
    inside = int(counts.sum())
    w = np.diff(edges)
    bins = edges.size - 1
    meta = {"R": R, "mode": int(j), "outside_fraction": 1 - inside / R, "warnings": []}
    if inside == 0:
        raise ValueError("no samples fall inside the histogram range")
    if meta["outside_fraction"] > 0:
        meta["warnings"].append(f"{R - inside} of {R} samples outside the grid")
    if R < 10 * bins:
        meta["warnings"].append(f"undersampled: R={R} for {bins} bins")
    for msg in meta["warnings"]:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    frac = counts / inside
    P = frac / w
    meta["stderr"] = np.sqrt(frac * (1 - frac) / inside) / w
    centers = 0.5 * (edges[1:] + edges[:-1])
    return OneModePdf(s=centers, P=P, n=float(s.mean()), edges=edges, meta=meta)


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between samples and a continuous CDF."""
    return float(_st.kstest(np.asarray(samples, dtype=float), cdf).statistic)


def rayleigh_test(angles_or_psi, axis=0):
    """Rayleigh test of circular uniformity; returns ``(Z, p)``.

    ``p`` uses the second-order small-sample correction to ``exp(-Z)``.
    """
    x = np.asarray(angles_or_psi)
    z = x if np.iscomplexobj(x) else np.exp(1j * x)
    R = z.shape[axis]
    Z = R * np.abs(z.mean(axis)) ** 2
    p = np.exp(-Z) * (1 + (2 * Z - Z**2) / (4 * R)
                      - (24 * Z - 132 * Z**2 + 76 * Z**3 - 9 * Z**4) / (288 * R**2))
    return Z, np.clip(p, 0.0, 1.0)


@dataclass(frozen=True)
class PhaseDiagnostics:
    """Phase-factor statistics of an ensemble against their RPA values."""

    R: int
    threshold: float
    modes: np.ndarray
    mean: np.ndarray
    pairs: np.ndarray
    psi_psi: np.ndarray
    psi_psibar: np.ndarray
    rayleigh_p: np.ndarray
    exceed: dict = field(default_factory=dict)
    allowed: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())


def phase_diagnostics(ensemble, pairs=None, max_full_pairs: int = 128, n_pair_sample: int = 10_000,
                      seed: int = 0, alpha: float = 1e-3) -> PhaseDiagnostics:
    """Test ``<psi> = 0``, ``<psi_l psi_m> = 0`` and ``<psi_l conj(psi_m)> = delta_lm``.

    Each statistic is compared with ``3/sqrt(R)``.  Under the null an
    individual exceedance has probability ``exp(-9)``, so the verdict for a
    family of ``K`` statistics allows up to the ``1 - alpha`` binomial quantile
    of exceedances.  Modes whose amplitude is zero in every realization carry
    no phase and are left out.  Uniformity requires Rayleigh-test ``p > 0.01``
    for at least 99% of modes (again with a binomial allowance).
    """
    a = ensemble_amplitudes(ensemble)
    R, N = a.shape
    if R < 100:
        warnings.warn(f"R={R} is too small for meaningful phase verdicts", RuntimeWarning, stacklevel=2)
    A = np.abs(a)
    active = np.flatnonzero(np.any(A > 0, axis=0))
    psi = np.divide(a, A, out=np.zeros_like(a), where=A > 0)[:, active]
    Na = active.size
    if pairs is None:
        pairs = _sample_pairs(Na, max_full_pairs, n_pair_sample, seed)
    else:
        pos = {int(m): i for i, m in enumerate(active)}
        pairs = np.array([[pos[int(l)], pos[int(m)]] for l, m in pairs], dtype=int).reshape(-1, 2)
    thr = 3 / np.sqrt(R)
    mean = psi.mean(0)
    pl, pm = psi[:, pairs[:, 0]], psi[:, pairs[:, 1]]
    pp = (pl * pm).mean(0)
    ppb = (pl * np.conj(pm)).mean(0)
    _, pval = rayleigh_test(psi)
    p_exceed = np.exp(-thr**2 * R)
    exceed = {"mean": int(np.sum(np.abs(mean) > thr)),
              "psi_psi": int(np.sum(np.abs(pp) > thr)),
              "psi_psibar": int(np.sum(np.abs(ppb) > thr)),
              "rayleigh": int(np.sum(pval <= 0.01))}
    sizes = {"mean": Na, "psi_psi": len(pairs), "psi_psibar": len(pairs), "rayleigh": Na}
    allowed = {}
    for key, K in sizes.items():
        q = 0.01 if key == "rayleigh" else p_exceed
        allowed[key] = int(_st.binom.ppf(1 - alpha, K, q)) if K else 0
    if sizes["rayleigh"]:
        allowed["rayleigh"] = max(allowed["rayleigh"], int(np.floor(0.01 * Na)))
    verdicts = {k: exceed[k] <= allowed[k] for k in exceed}
    return PhaseDiagnostics(R, thr, active, mean, active[pairs], pp, ppb, pval, exceed, allowed, verdicts)


def distance_correlation(x, y) -> float:
    """Sample distance correlation of paired observations (rows)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x = x.reshape(len(x), -1)
    y = y.reshape(len(y), -1)
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("need at least two paired observations")

    def centered(z):
        d = np.sqrt(((z[:, None, :] - z[None, :, :]) ** 2).sum(-1))
        return d - d.mean(0) - d.mean(1)[:, None] + d.mean()

    A, B = centered(x), centered(y)
    dxy = (A * B).mean()
    dxx = (A * A).mean()
    dyy = (B * B).mean()
    if dxx <= 0 or dyy <= 0:
        return 0.0
    return float(np.sqrt(max(dxy, 0.0) / np.sqrt(dxx * dyy)))


def amplitude_phase_independence(ensemble, mode: int, permutations: int = 200, seed: int = 0,
                                 max_samples: int = 1000):
    """Distance correlation between ``A`` and ``psi`` for one mode.

    Returns ``(dcor, threshold, p_value)`` where the threshold is the 99th
    percentile of the permutation null.
    """
    a = ensemble_amplitudes(ensemble)[:max_samples, mode]
    A = np.abs(a)
    psi = np.divide(a, A, out=np.zeros_like(a), where=A > 0)
    y = np.stack([psi.real, psi.imag], axis=1)
    obs = distance_correlation(A, y)
    rng = np.random.default_rng([int(seed), int(mode)])
    null = np.array([distance_correlation(A[rng.permutation(A.size)], y) for _ in range(permutations)])
    return obs, float(np.quantile(null, 0.99)), float((1 + np.sum(null >= obs)) / (1 + permutations))


def phi_psi_example(R: int, seed: int = 0, n_max: int = 4) -> dict:
    """Two phases sharing a random winding number.

    ``phi_i = 2 pi N + r_i`` with ``N`` uniform on ``0..n_max-1`` and ``r_i``
    i.i.d. uniform on ``[0, 2 pi)``.  The angles are correlated through ``N``
    (covariance ``4 pi^2 Var(N)``) while the phase factors ``exp(i phi_i)`` are
    exactly independent and uniform.
    """
    rng = np.random.default_rng(seed)
    N = rng.integers(0, n_max, R)
    r = 2 * np.pi * rng.random((R, 2))
    phi = 2 * np.pi * N[:, None] + r
    d = phi - phi.mean(0)
    u = d[:, 0] * d[:, 1]
    cov = float(u.sum() / (R - 1))
    psi = np.exp(1j * phi)
    return {
        "cov": cov,
        "cov_stderr": float(u.std(ddof=1) / np.sqrt(R)),
        "cov_expected": 4 * np.pi**2 * (n_max**2 - 1) / 12,
        "psi_mean": psi.mean(0),
        "psi_psi": complex((psi[:, 0] * psi[:, 1]).mean()),
        "psi_psibar": complex((psi[:, 0] * np.conj(psi[:, 1])).mean()),
        "threshold": 3 / np.sqrt(R),
    }


def rate_estimate(a0, aT, T: float, n=None, paired: bool = False, controls: bool = True):
    """Ensemble estimate of ``dn/dt`` over a window from initial and final amplitudes.

    Parameters
    ----------
    a0, aT : array_like, shape (R, N)
    T : float
        Window length.
    n : array_like, optional
        Exact spectrum of the initial law.  With ``controls`` the centered
        initial intensities ``|a0|^2 - n`` of all excited modes are used as
        regression control variates; their mean is zero by construction so
        the estimator stays consistent while the amplitude noise drops out.
    paired : bool
        Realizations ``r`` and ``r + R/2`` are antithetic partners and are
        averaged before estimating errors.

    Returns
    -------
    rate, stderr : ndarray
    """
    a0 = ensemble_amplitudes(a0)
    aT = ensemble_amplitudes(aT)
    s0 = np.abs(a0) ** 2
    Y = np.abs(aT) ** 2 - s0
    if paired:
        h = Y.shape[0] // 2
        if 2 * h != Y.shape[0]:
            raise ValueError("paired estimate needs an even ensemble")
        Y = 0.5 * (Y[:h] + Y[h:])
        s0 = s0[:h]
    K = Y.shape[0]
    if controls and n is not None:
        n = np.asarray(n, dtype=float)
        X = (s0 - n)[:, n > 0]
        if X.shape[1] >= K - 2:
            raise ValueError("too few realizations for the control-variate regression")
        Xc = X - X.mean(0)
        beta, *_ = np.linalg.lstsq(Xc, Y - Y.mean(0), rcond=None)
        Y = Y - X @ beta
        dof = K - 1 - X.shape[1]
    else:
        dof = K - 1
    rate = Y.mean(0) / T
    resid = Y - Y.mean(0)
    se = np.sqrt((resid**2).sum(0) / dof / K) / T
    return rate, se
