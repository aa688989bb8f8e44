"""One-mode statistics: moment hierarchy, PDF continuity equation and its
finite-flux steady states.

For a single mode with intensity ``s = |a|^2`` the PDF obeys

    dP/dt + dF/ds = 0,      F = -s (gamma P + eta dP/ds)

whose moments ``M^(p) = <s^p>`` satisfy
``dM^(p)/dt = -p gamma M^(p) + p^2 eta M^(p-1)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .specfun import EULER_GAMMA, ei, eix

__all__ = [
    "OneModePdf",
    "moment_rhs",
    "moment_hierarchy_rhs",
    "steady_moments",
    "geometric_grid",
    "rayleigh_pdf",
    "initial_pdf",
    "face_flux",
    "stable_dt",
    "evolve_pdf",
    "pdf_moments",
    "steady_density",
    "steady_density_derivative",
    "steady_pdf",
    "max_steady_flux",
    "tail_series",
    "breaking_amplitude",
    "breaking_regime",
]


@dataclass(frozen=True)
class OneModePdf:
    """Discretized one-mode intensity PDF.

    Attributes
    ----------
    s : ndarray
        Points carrying ``P`` (cell centers for finite-volume PDFs).
    P : ndarray
        Density at ``s``.
    edges : ndarray or None
        Cell faces for finite-volume PDFs (``len(s) + 1`` values).
    F : ndarray or None
        Probability flux, on ``edges`` when present, otherwise at ``s``.
    n, eta, gamma : float
        Spectrum value and kinetic rates; ``gamma_tilde`` is an optional
        source/sink rate entering as ``gamma - gamma_tilde``.
    """

    s: np.ndarray
    P: np.ndarray
    n: float = np.nan
    eta: float = np.nan
    gamma: float = np.nan
    edges: Optional[np.ndarray] = None
    F: Optional[np.ndarray] = None
    gamma_tilde: float = 0.0
    s_cut: float = np.inf
    time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def widths(self) -> np.ndarray:
        if self.edges is None:
            raise ValueError("PDF has no cell structure")
        return np.diff(self.edges)

    def total(self) -> float:
        """``int P ds`` (cell sums for finite-volume PDFs, trapezoid otherwise)."""
        if self.edges is not None:
            return float(np.sum(self.P * self.widths))
        return float(np.trapezoid(self.P, self.s))


# -- moment hierarchy ---------------------------------------------------------

def moment_rhs(p: int, M, eta, gamma):
    """``dM^(p)/dt = -p gamma M^(p) + p^2 eta M^(p-1)`` with ``M[0] = 1``.

    For ``p = 1`` the arithmetic is exactly ``-gamma n + eta``, the kinetic
    right-hand side.
    """
    if p < 1:
        raise ValueError("moment order must be >= 1")
    return -p * gamma * M[p] + p * p * eta * M[p - 1]


def moment_hierarchy_rhs(M, eta, gamma) -> np.ndarray:
    """Right-hand sides for ``p = 1..len(M)-1``."""
    M = np.asarray(M, dtype=float)
    return np.array([moment_rhs(p, M, eta, gamma) for p in range(1, len(M))])


def steady_moments(p_max: int, eta: float, gamma: float) -> np.ndarray:
    """Fixed point of the hierarchy by the recursion ``M^(p) = p (eta/gamma) M^(p-1)``."""
    M = np.ones(p_max + 1)
    for p in range(1, p_max + 1):
        M[p] = p * eta / gamma * M[p - 1]
    return M


# -- grids and reference densities ---------------------------------------------

def geometric_grid(s_max: float, cells: int = 400, s_min: Optional[float] = None) -> np.ndarray:
    """Cell faces: ``0`` followed by ``cells`` geometrically spaced faces up to ``s_max``."""
    if not s_max > 0 or cells < 2:
        raise ValueError("need s_max > 0 and at least two cells")
    if s_min is None:
        s_min = s_max * 1e-6
    return np.concatenate([[0.0], np.geomspace(s_min, s_max, cells)])


def rayleigh_pdf(s, n: float) -> np.ndarray:
    """Intensity density ``exp(-s/n)/n`` of a Gaussian mode."""
    return np.exp(-np.asarray(s, dtype=float) / n) / n


def initial_pdf(edges, P_fn, n, eta, gamma, gamma_tilde=0.0) -> OneModePdf:
    """Cell averages of ``P_fn`` (Simpson per cell), renormalized to unit mass."""
    edges = np.asarray(edges, dtype=float)
    mid = 0.5 * (edges[:-1] + edges[1:])
    w = np.diff(edges)
    P = (P_fn(edges[:-1]) + 4 * P_fn(mid) + P_fn(edges[1:])) / 6
    P = P / np.sum(P * w)
    return OneModePdf(s=mid, P=P, n=n, eta=eta, gamma=gamma, edges=edges,
                      gamma_tilde=gamma_tilde, s_cut=edges[-1])


# -- finite-volume continuity equation -----------------------------------------

def _bernoulli(x):
    # B(x) = x / (exp(x) - 1), B(0) = 1
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = np.abs(x) > 1e-10
    out[nz] = x[nz] / np.expm1(x[nz])
    out[~nz] = 1 - x[~nz] / 2
    return out


def _face_coefficients(pdf: OneModePdf):
    """Interior-face flux ``F_f = a_f P_left - b_f P_right`` (Scharfetter-Gummel).

    Freezing ``s`` at the face, the constant-flux solution between two cell
    centers is exact, so the exponential ``exp(-s gamma/eta)`` carries zero
    discrete flux.
    """
    if pdf.edges is None:
        raise ValueError("finite-volume operations need cell edges")
    g = pdf.gamma - pdf.gamma_tilde
    sf = pdf.edges[1:-1]
    h = np.diff(pdf.s)
    D = pdf.eta * sf
    if pdf.eta > 0:
        kh = g / pdf.eta * h
        a = D / h * _bernoulli(kh)
        b = D / h * _bernoulli(-kh)
    else:  # pure advection, upwind
        v = -g * sf
        a = np.maximum(v, 0.0)
        b = np.maximum(-v, 0.0)
    return a, b


def face_flux(pdf: OneModePdf) -> np.ndarray:
    """Flux on all faces; zero at ``s = 0`` and at the closed outer face."""
    a, b = _face_coefficients(pdf)
    F = np.zeros(len(pdf.edges))
    F[1:-1] = a * pdf.P[:-1] - b * pdf.P[1:]
    return F


def _operator(pdf):
    # dP/dt = L P with L assembled from the face coefficients
    a, b = _face_coefficients(pdf)
    w = pdf.widths
    K = len(w)
    diag = np.zeros(K)
    lower = np.zeros(K - 1)
    upper = np.zeros(K - 1)
    # face between cell i and i+1 removes a P_i - b P_{i+1} from i, adds it to i+1
    diag[:-1] -= a / w[:-1]
    upper += b / w[:-1]
    diag[1:] -= b / w[1:]
    lower += a / w[1:]
    return sp.diags([lower, diag, upper], [-1, 0, 1], format="csc")


def stable_dt(pdf: OneModePdf) -> float:
    """Largest explicit step keeping the update positive (outflow <= cell mass)."""
    a, b = _face_coefficients(pdf)
    w = pdf.widths
    out = np.zeros(len(w))
    out[:-1] += a
    out[1:] += b
    with np.errstate(divide="ignore"):
        return float(np.min(np.where(out > 0, w / out, np.inf)))


def evolve_pdf(pdf: OneModePdf, dt: float, steps: int = 1, method: str = "implicit") -> OneModePdf:
    """Advance the continuity equation with zero-flux boundaries.

    ``method='explicit'`` is forward Euler and requires ``dt <= stable_dt(pdf)``;
    ``method='implicit'`` is backward Euler, unconditionally stable and
    positivity preserving.  Both conserve ``sum P ds`` to round-off.
    """
    if dt <= 0 or steps < 1:
        raise ValueError("need dt > 0 and steps >= 1")
    P = pdf.P.astype(float).copy()
    w = pdf.widths
    L = _operator(pdf)
    if method == "explicit":
        lim = stable_dt(pdf)
        if dt > lim:
            raise ValueError(f"explicit step dt={dt:.3g} violates the CFL bound {lim:.3g}")
        for _ in range(steps):
            P = P + dt * (L @ P)
    elif method == "implicit":
        lu = spla.splu((sp.identity(len(P), format="csc") - dt * L).tocsc())
        mass = np.sum(P * w)
        for _ in range(steps):
            P = lu.solve(P)
        # the solve conserves mass up to its own round-off; remove that drift
        P *= mass / np.sum(P * w)
    else:
        raise ValueError(f"unknown method {method!r}")
    if np.any(P < -1e-14 * np.max(np.abs(P))):
        raise FloatingPointError("negative density produced by the PDF update")
    P = np.maximum(P, 0.0)
    out = replace(pdf, P=P, time=pdf.time + dt * steps)
    return replace(out, F=face_flux(out))


def pdf_moments(pdf: OneModePdf, p_max: int) -> np.ndarray:
    """``M^(p) = int s^p P ds`` for ``p = 0..p_max`` using exact cell integrals
    of a piecewise-constant density."""
    if pdf.edges is None:
        return np.array([np.trapezoid(pdf.s**p * pdf.P, pdf.s) for p in range(p_max + 1)])
    e = pdf.edges
    return np.array([np.sum(pdf.P * (e[1:] ** (p + 1) - e[:-1] ** (p + 1)) / (p + 1))
                     for p in range(p_max + 1)])


# -- finite-flux steady states ---------------------------------------------------

def _norm_terms(X):
    # int_0^X exp(-x) dx and int_0^X Ei(x) exp(-x) dx
    if np.isinf(X):
        return 1.0, np.inf
    return -np.expm1(-X), np.log(X) + EULER_GAMMA - float(eix(X))


def _constant(n, F, eta, s_cut):
    X = s_cut / n
    h0, h1 = _norm_terms(X)
    if F == 0:
        return 1.0 / (n * h0)
    if np.isinf(X):
        raise ValueError("a finite flux needs a finite cutoff s_cut for normalization")
    return (1 + F / eta * n * h1) / (n * h0)


def steady_density(s, n: float, F: float, eta: float, s_cut: float = np.inf) -> np.ndarray:
    """``C exp(-s/n) - (F/eta) Ei(s/n) exp(-s/n)``, normalized on ``[0, s_cut]``
    and zero above the cutoff."""
    s = np.asarray(s, dtype=float)
    C = _constant(n, F, eta, s_cut)
    x = s / n
    with np.errstate(divide="ignore", invalid="ignore"):
        P = C * np.exp(-x) - (F / eta) * eix(x) if F != 0 else C * np.exp(-x)
    return np.where(s <= s_cut, P, 0.0)


def steady_density_derivative(s, n: float, F: float, eta: float, s_cut: float = np.inf) -> np.ndarray:
    """``dP/ds`` of :func:`steady_density` below the cutoff."""
    s = np.asarray(s, dtype=float)
    C = _constant(n, F, eta, s_cut)
    x = s / n
    with np.errstate(divide="ignore", invalid="ignore"):
        # d/dx [exp(-x) Ei(x)] = 1/x - exp(-x) Ei(x)
        dP = -C * np.exp(-x) - (F / eta) * (1 / x - eix(x)) if F != 0 else -C * np.exp(-x)
    return np.where(s <= s_cut, dP / n, 0.0)


def max_steady_flux(n: float, eta: float, s_cut: float) -> float:
    """Largest positive flux for which the steady density stays nonnegative on
    ``(0, s_cut]``."""
    X = s_cut / n
    h0, h1 = _norm_terms(X)
    return eta / (n * (h0 * float(ei(X)) - h1))


def steady_pdf(s_grid, n: float, F: float, eta: float, s_cut: Optional[float] = None) -> OneModePdf:
    """Constant-flux steady state on the points ``s_grid``.

    Parameters
    ----------
    s_grid : array_like
        Strictly increasing, nonnegative intensities.
    n, eta : float
        Spectrum value and gain rate (``gamma = eta/n``).
    F : float
        Constant flux; negative values enhance the tail.
    s_cut : float, optional
        Normalization cutoff (typically the breaking intensity).  Required
        when ``F != 0``; defaults to ``inf`` for ``F == 0``.
    """
    s = np.asarray(s_grid, dtype=float)
    if not (n > 0 and eta > 0):
        raise ValueError("need n > 0 and eta > 0")
    if s.ndim != 1 or np.any(np.diff(s) <= 0) or np.any(s < 0):
        raise ValueError("s_grid must be strictly increasing and nonnegative")
    if s_cut is None:
        if F != 0:
            raise ValueError("a finite flux needs a finite cutoff s_cut for normalization")
        s_cut = np.inf
    P = steady_density(s, n, F, eta, s_cut)
    inside = (s > 0) & (s <= s_cut)
    if np.any(P[inside] < 0):
        if F > 0:
            raise ValueError(f"flux F={F:.6g} makes the steady density negative; positivity "
                             f"requires F <= {max_steady_flux(n, eta, s_cut):.6g}")
        s_bad = s[inside][P[inside] < 0].max()
        raise ValueError(f"flux F={F:.6g} makes the steady density negative for s <= {s_bad:.3g}; "
                         f"the constant-flux solution needs |F| small enough that this lies "
                         f"below the grid")
    return OneModePdf(s=s, P=P, n=n, eta=eta, gamma=eta / n, F=np.full(s.shape, float(F)),
                      s_cut=s_cut, meta={"rayleigh": rayleigh_pdf(s, n)})


def tail_series(s, F: float, gamma: float, eta: float, terms: int = 2) -> np.ndarray:
    """Large-``s`` expansion ``-F/(s gamma) - eta F/(gamma s)^2`` of the
    particular solution."""
    if terms not in (1, 2):
        raise ValueError("terms must be 1 or 2")
    s = np.asarray(s, dtype=float)
    out = -F / (s * gamma)
    if terms == 2:
        out = out - eta * F / (gamma * s) ** 2
    return out


def breaking_amplitude(omega, epsilon, W, k):
    """Intensity ``omega / (eps W k^2)`` above which weak nonlinearity fails."""
    omega, epsilon, W, k = (np.asarray(v, dtype=float) for v in (omega, epsilon, W, k))
    if np.any(omega <= 0) or np.any(epsilon <= 0) or np.any(W <= 0) or np.any(k <= 0):
        raise ValueError("breaking_amplitude needs positive inputs")
    return omega / (epsilon * W * k**2)


def breaking_regime(s_nl, n, factor: float = 10.0) -> bool:
    """True when the cutoff lies far from the PDF core (``s_nl >= factor n``);
    warns otherwise."""
    ok = bool(np.all(np.asarray(s_nl) >= factor * np.asarray(n)))
    if not ok:
        warnings.warn("breaking intensity is close to the PDF core; the weak-nonlinearity "
                      "description of the tail is unreliable", RuntimeWarning, stacklevel=2)
    return ok
