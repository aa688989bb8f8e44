"""Joint intensity PDF of a few resonantly coupled modes.

For ``N_small`` modes the PDF ``P(s_1, ..., s_N)`` obeys the continuity
equation ``dP/dt = -sum_j dF_j/ds_j``.  Two discrete flux forms are provided
for three-wave sets; their divergences agree in the continuum.

``'printed'``, per ordered triad ``(p; q, r)`` with weight ``A = eps^2 |V|^2 delta``::

    F_p += -4 pi s_p A (s_q s_r d_p P - 2 s_q P - 4 s_q s_r d_q P)
    F_q += -4 pi s_q A (2 s_p s_r d_q P + 2 s_r P + 2 s_p s_r d_r P)

``'peierls'``, the symmetric drift-free form::

    F = -4 pi sum_t A_t s_p s_q s_r (B_t P) e_t,     B_t = e_t . grad,  e_t = (+1, -1, -1)

For four-wave sets, per ordered quartet ``(j, l; m, n)``::

    F_j += -4 pi A s_j s_l s_m s_n (d_j + d_l - d_m - d_n) P

Triad lists hold both orderings of ``(q, r)``; quartet lists are closed
under ``j <-> l``, ``m <-> n`` and ``(j, l) <-> (m, n)``.  Source and sink
rates ``gamma_tilde`` add ``+gamma_tilde_j s_j P`` to ``F_j``, matching
``gamma -> gamma - gamma_tilde`` in the one-mode flux.

The grid is cell-centred and uniform per mode on ``[0, s_max_j]``.  Fluxes
live on faces normal to their own direction and vanish on both ends, so the
conservative divergence preserves ``sum P dV`` to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .kinetics import broadened_delta, quartet_rates, triad_rates
from .lattice import QuartetSet, TriadSet

__all__ = [
    "ResonantSet",
    "MultiModePdf",
    "FluxField",
    "synthetic_triad",
    "synthetic_quartet",
    "restrict_resonances",
    "tensor_grid",
    "product_pdf",
    "thermodynamic_pdf",
    "induced_rates",
    "pbp_flux_3w",
    "pbp_flux_4w",
    "pbp_flux",
    "pbp_divergence",
    "divergence_residual",
    "stable_dt",
    "evolve_pbp",
    "marginal_flux",
    "marginal_density",
    "vortex_projection",
    "circulation",
    "balancing_sources",
]

MAX_MODES = 6
DEFAULT_BUDGET = 2 * 1024**3


@dataclass(frozen=True)
class ResonantSet:
    """Interactions among a small set of local modes ``0..N-1``.

    Attributes
    ----------
    order : int
        3 or 4.
    omega : ndarray
        Linear frequencies of the participating modes.
    members : ndarray, shape (K, order)
        Local indices of ordered triads ``(p, q, r)`` or quartets ``(j, l, m, n)``.
    weight : ndarray, shape (K,)
        ``eps^2 |V|^2 delta(w)`` (or ``|W|^2``) per ordered tuple.
    modes : tuple
        Global labels of the local modes (lattice indices when restricted).
    """

    order: int
    omega: np.ndarray
    members: np.ndarray
    weight: np.ndarray
    modes: tuple = ()

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        mem = np.asarray(self.members, dtype=int).reshape(-1, self.order)
        w = np.broadcast_to(np.asarray(self.weight, dtype=float), (len(mem),)).copy()
        if self.order not in (3, 4):
            raise ValueError("order must be 3 or 4")
        if om.size > MAX_MODES:
            raise ValueError(f"at most {MAX_MODES} modes are supported, got {om.size}")
        if mem.size and (mem.min() < 0 or mem.max() >= om.size):
            raise ValueError("resonance set references modes outside the PDF's mode list")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "members", mem)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "modes", tuple(self.modes) or tuple(range(om.size)))

    @property
    def N(self) -> int:
        return self.omega.size

    def detuning(self) -> np.ndarray:
        om = self.omega[self.members]
        if self.order == 3:
            return om[:, 0] - om[:, 1] - om[:, 2]
        return om[:, 0] + om[:, 1] - om[:, 2] - om[:, 3]

    def scaled(self, factor: float) -> "ResonantSet":
        return replace(self, weight=self.weight * factor)


def synthetic_triad(omega_q: float = 1.0, omega_r: float = 1.5, V: float = 1.0, epsilon: float = 0.1,
                    delta_weight: float = 1.0) -> ResonantSet:
    """Exactly resonant triad ``omega_0 = omega_1 + omega_2``.

    ``delta_weight`` stands in for the broadened delta at zero detuning.
    """
    om = np.array([omega_q + omega_r, omega_q, omega_r])
    w = epsilon**2 * abs(V) ** 2 * delta_weight
    return ResonantSet(3, om, [(0, 1, 2), (0, 2, 1)], w)


def _quartet_orbit(j, l, m, n):
    out = set()
    for a, b in ((j, l), (l, j)):
        for c, d in ((m, n), (n, m)):
            out.add((a, b, c, d))
            out.add((c, d, a, b))
    return sorted(out)


def synthetic_quartet(omegas=(1.0, 2.0, 1.2), W: float = 1.0, epsilon: float = 0.1,
                      delta_weight: float = 1.0) -> ResonantSet:
    """Exactly resonant quartet ``omega_0 + omega_1 = omega_2 + omega_3``.

    ``omegas`` gives ``omega_0, omega_1, omega_2``; ``omega_3`` closes the resonance.
    """
    o0, o1, o2 = omegas
    o3 = o0 + o1 - o2
    if o3 <= 0:
        raise ValueError("resonance closure gives a nonpositive frequency")
    om = np.array([o0, o1, o2, o3])
    w = epsilon**2 * abs(W) ** 2 * delta_weight
    return ResonantSet(4, om, _quartet_orbit(0, 1, 2, 3), w)


def restrict_resonances(system, rset, modes: Sequence[int], dw: float, kernel: str = "triangular",
                        drop_external: bool = False) -> ResonantSet:
    """Resonances of a lattice set among the global modes ``modes``.

    Tuples touching both listed and unlisted modes raise unless
    ``drop_external``; tuples entirely outside are ignored.
    """
    modes = [int(m) for m in modes]
    if len(set(modes)) != len(modes):
        raise ValueError("mode list has duplicates")
    lat = rset.lattice
    k = lat.wavevectors
    if isinstance(rset, TriadSet):
        cols = np.stack([rset.j, rset.m, rset.n], axis=1)
        amp = np.abs(system.coupling3(k[rset.j], k[rset.m], k[rset.n])) ** 2
        order = 3
    elif isinstance(rset, QuartetSet):
        cols = np.stack([rset.j, rset.l, rset.m, rset.n], axis=1)
        amp = np.abs(system.coupling4(k[rset.j], k[rset.l], k[rset.m], k[rset.n])) ** 2
        order = 4
    else:
        raise TypeError("expected a TriadSet or QuartetSet")
    inside = np.isin(cols, modes)
    touching = inside.any(1)
    internal = inside.all(1)
    if np.any(touching & ~internal) and not drop_external:
        raise ValueError("resonance set references modes outside the PDF's mode list")
    local = {m: i for i, m in enumerate(modes)}
    mem = np.vectorize(local.get)(cols[internal]) if internal.any() else np.zeros((0, order), int)
    w = system.epsilon**2 * amp[internal] * broadened_delta(rset.detuning[internal], dw, kernel)
    om = system.dispersion(k[modes])
    return ResonantSet(order, om, mem, w, tuple(modes))


@dataclass(frozen=True)
class MultiModePdf:
    """Joint PDF on a tensor grid of cell averages.

    ``edges[i]`` are the faces along mode ``i``; ``P`` has one axis per mode.
    """

    rset: ResonantSet
    edges: tuple
    P: np.ndarray
    time: float = 0.0
    gamma_tilde: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        edges = tuple(np.asarray(e, dtype=float) for e in self.edges)
        P = np.asarray(self.P, dtype=float)
        if len(edges) != self.rset.N or P.ndim != self.rset.N:
            raise ValueError("grid dimension must match the number of modes")
        if P.shape != tuple(e.size - 1 for e in edges):
            raise ValueError("P shape does not match the grid")
        for e in edges:
            if e[0] != 0 or np.any(np.diff(e) <= 0):
                raise ValueError("each grid must start at 0 and increase")
            if not np.allclose(np.diff(e), e[1] - e[0], rtol=1e-9):
                raise ValueError("grids must be uniform")
        gt = np.zeros(self.rset.N) if self.gamma_tilde is None else np.asarray(self.gamma_tilde, dtype=float)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "gamma_tilde", gt)

    @property
    def ndim(self) -> int:
        return self.P.ndim

    @property
    def h(self) -> np.ndarray:
        return np.array([e[1] - e[0] for e in self.edges])

    @property
    def centers(self) -> tuple:
        return tuple(0.5 * (e[1:] + e[:-1]) for e in self.edges)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def total(self) -> float:
        return float(self.P.sum() * self.cell_volume)

    def normalized(self) -> "MultiModePdf":
        return replace(self, P=self.P / self.total())


@dataclass(frozen=True)
class FluxField:
    """Face-centred flux components; ``F[i]`` has ``cells_i + 1`` entries along axis ``i``."""

    F: tuple
    form: str = "printed"


def tensor_grid(s_max, cells: int = 48) -> tuple:
    """Uniform face arrays ``[0, s_max_i]`` with ``cells`` cells each."""
    return tuple(np.linspace(0.0, float(sm), cells + 1) for sm in np.atleast_1d(s_max))


def _check_budget(shape, budget):
    need = 8 * int(np.prod(shape)) * (2 * len(shape) + 8)
    if need > budget:
        raise MemoryError(f"grid {shape} needs about {need / 1024**2:.0f} MiB, over the budget "
                          f"of {budget / 1024**2:.0f} MiB")


def product_pdf(rset: ResonantSet, n, edges, gamma_tilde=None, budget: int = DEFAULT_BUDGET) -> MultiModePdf:
    """Independent exponential marginals ``prod (1/n_j) exp(-s_j/n_j)`` as exact cell averages."""
    n = np.asarray(n, dtype=float)
    if n.shape != (rset.N,) or np.any(n <= 0):
        raise ValueError("need one positive n per mode")
    _check_budget(tuple(e.size - 1 for e in edges), budget)
    P = np.ones(())
    for e, nj in zip(edges, n):
        e = np.asarray(e, dtype=float)
        # cell average of exp(-s/n)/n, scaled so the grid integral is exactly one
        mass = -np.expm1(-np.diff(e) / nj) * np.exp(-e[:-1] / nj)
        marg = mass / np.diff(e) / mass.sum()
        P = np.multiply.outer(P, marg)
    return MultiModePdf(rset, tuple(edges), P, gamma_tilde=gamma_tilde, meta={"n": n})


def thermodynamic_pdf(rset: ResonantSet, edges, T_eq: float = 1.0, mu: float = 0.0) -> MultiModePdf:
    """Product PDF with Rayleigh-Jeans ``n_j = T/(omega_j + mu)``."""
    return product_pdf(rset, T_eq / (rset.omega + mu), edges)


def induced_rates(rset: ResonantSet, n):
    """Kinetic ``(eta, gamma)`` that a product PDF with spectrum ``n`` induces."""
    m = rset.members
    if rset.order == 3:
        return triad_rates(n, m[:, 0], m[:, 1], m[:, 2], rset.weight, rset.N)
    return quartet_rates(n, m[:, 0], m[:, 1], m[:, 2], m[:, 3], rset.weight, rset.N)


# -- face operators ----------------------------------------------------------

def _face_avg(X, axis):
    """Average of neighbouring cells on interior faces; zero on the two end faces."""
    X = np.moveaxis(X, axis, 0)
    out = np.zeros((X.shape[0] + 1,) + X.shape[1:])
    out[1:-1] = 0.5 * (X[1:] + X[:-1])
    return np.moveaxis(out, 0, axis)


def _face_diff(X, axis, h):
    X = np.moveaxis(X, axis, 0)
    out = np.zeros((X.shape[0] + 1,) + X.shape[1:])
    out[1:-1] = (X[1:] - X[:-1]) / h
    return np.moveaxis(out, 0, axis)


class _Faces:
    """Lazily evaluated ``P`` and gradients on the faces normal to ``axis``."""

    def __init__(self, pdf: MultiModePdf, axis: int, grads):
        self.pdf, self.axis, self.grads = pdf, axis, grads
        self._cache = {}
        d = pdf.ndim
        self.s = []
        for k in range(d):
            src = pdf.edges[k] if k == axis else pdf.centers[k]
            shape = [1] * d
            shape[k] = src.size
            self.s.append(src.reshape(shape))

    def P(self):
        if "P" not in self._cache:
            self._cache["P"] = _face_avg(self.pdf.P, self.axis)
        return self._cache["P"]

    def dP(self, k):
        if k not in self._cache:
            if k == self.axis:
                self._cache[k] = _face_diff(self.pdf.P, k, self.pdf.h[k])
            else:
                self._cache[k] = _face_avg(self.grads[k], self.axis)
        return self._cache[k]


def _transverse_grads(pdf):
    out = []
    for k in range(pdf.ndim):
        if pdf.P.shape[k] >= 3:
            out.append(np.gradient(pdf.P, pdf.h[k], axis=k, edge_order=2))
        else:
            out.append(np.gradient(pdf.P, pdf.h[k], axis=k, edge_order=1))
    return out


def _prod(faces, idx):
    out = 1.0
    for k in idx:
        out = out * faces.s[k]
    return out


def _zero_ends(F, axis):
    F = np.moveaxis(F, axis, 0)
    F[0] = 0.0
    F[-1] = 0.0
    return np.moveaxis(F, 0, axis)


def _add_sources(F, pdf, faces_list):
    gt = pdf.gamma_tilde
    if np.any(gt != 0):
        for j, fc in enumerate(faces_list):
            F[j] = F[j] + gt[j] * fc.s[j] * fc.P()
    return F


def pbp_flux_3w(pdf: MultiModePdf, form: str = "printed") -> FluxField:
    """Probability flux of a three-wave resonant set.

    Parameters
    ----------
    pdf : MultiModePdf
    form : {'printed', 'peierls'}
        Flux gauge; both give the same divergence up to discretization error.
    """
    rset = pdf.rset
    if rset.order != 3:
        raise TypeError("pbp_flux_3w requires a three-wave resonant set")
    if form not in ("printed", "peierls"):
        raise ValueError(f"unknown flux form {form!r}")
    grads = _transverse_grads(pdf)
    d = pdf.ndim
    faces = [_Faces(pdf, j, grads) for j in range(d)]
    F = [np.zeros(fc.P().shape) for fc in faces]
    c = 4 * np.pi * rset.weight
    for (p, q, r), A in zip(rset.members, c):
        if A == 0:
            continue
        if form == "printed":
            fp = faces[p]
            F[p] = F[p] - A * fp.s[p] * (fp.s[q] * fp.s[r] * fp.dP(p) - 2 * fp.s[q] * fp.P()
                                         - 4 * fp.s[q] * fp.s[r] * fp.dP(q))
            fq = faces[q]
            F[q] = F[q] - A * fq.s[q] * (2 * fq.s[p] * fq.s[r] * fq.dP(q) + 2 * fq.s[r] * fq.P()
                                         + 2 * fq.s[p] * fq.s[r] * fq.dP(r))
        else:
            e = np.zeros(d)
            np.add.at(e, [p, q, r], [1.0, -1.0, -1.0])
            for i in np.flatnonzero(e):
                fi = faces[i]
                BP = sum(e[k] * fi.dP(k) for k in np.flatnonzero(e))
                F[i] = F[i] - A * e[i] * _prod(fi, (p, q, r)) * BP
    F = _add_sources(F, pdf, faces)
    return FluxField(tuple(_zero_ends(Fi, i) for i, Fi in enumerate(F)), form)


def pbp_flux_4w(pdf: MultiModePdf) -> FluxField:
    """Probability flux of a four-wave resonant set."""
    rset = pdf.rset
    if rset.order != 4:
        raise TypeError("pbp_flux_4w requires a four-wave resonant set")
    grads = _transverse_grads(pdf)
    d = pdf.ndim
    faces = [_Faces(pdf, j, grads) for j in range(d)]
    F = [np.zeros(fc.P().shape) for fc in faces]
    c = 4 * np.pi * rset.weight
    for (j, l, m, n), A in zip(rset.members, c):
        if A == 0:
            continue
        fj = faces[j]
        e = np.zeros(d)
        np.add.at(e, [j, l, m, n], [1.0, 1.0, -1.0, -1.0])
        BP = sum(e[k] * fj.dP(k) for k in np.flatnonzero(e))
        F[j] = F[j] - A * _prod(fj, (j, l, m, n)) * BP
    F = _add_sources(F, pdf, faces)
    return FluxField(tuple(_zero_ends(Fi, i) for i, Fi in enumerate(F)), "printed")


def pbp_flux(pdf: MultiModePdf, form: str = "printed") -> FluxField:
    if pdf.rset.order == 3:
        return pbp_flux_3w(pdf, form)
    return pbp_flux_4w(pdf)


def pbp_divergence(flux: FluxField, pdf: MultiModePdf) -> np.ndarray:
    """``dP/dt = -sum_j dF_j/ds_j`` by conservative differencing."""
    if len(flux.F) != pdf.ndim:
        raise ValueError("flux and PDF have different dimension")
    out = np.zeros(pdf.P.shape)
    for i, Fi in enumerate(flux.F):
        expect = list(pdf.P.shape)
        expect[i] += 1
        if Fi.shape != tuple(expect):
            raise ValueError(f"flux component {i} has shape {Fi.shape}, expected {tuple(expect)}")
        out -= np.diff(Fi, axis=i) / pdf.h[i]
    return out


def divergence_residual(pdf: MultiModePdf, form: str = "printed", norm: str = "l1") -> float:
    """Size of ``dP/dt`` for a given PDF.

    ``'l1'`` is ``sum |dP/dt| dV``, the rate at which probability is being
    rearranged; ``'max'`` is the largest cell value.
    """
    dP = pbp_divergence(pbp_flux(pdf, form), pdf)
    if norm == "l1":
        return float(np.abs(dP).sum() * pdf.cell_volume)
    if norm == "max":
        return float(np.abs(dP).max())
    raise ValueError(f"unknown norm {norm!r}")


def stable_dt(pdf: MultiModePdf) -> float:
    """Conservative explicit RK4 step bound from the largest diffusion rate on the grid."""
    rset = pdf.rset
    smax = np.array([e[-1] for e in pdf.edges])
    h = pdf.h
    lam = 0.0
    for mem, A in zip(rset.members, rset.weight):
        e = np.zeros(pdf.ndim)
        sign = [1.0, -1.0, -1.0] if rset.order == 3 else [1.0, 1.0, -1.0, -1.0]
        np.add.at(e, mem, sign)
        mult = 4.0 if rset.order == 3 else 4.0
        lam += 4 * np.pi * A * mult * np.prod(smax[mem]) * (np.abs(e) / h).sum() ** 2 * 4
    lam += 4 * np.sum(np.abs(pdf.gamma_tilde) * smax / h)
    return np.inf if lam == 0 else 2.0 / lam


def evolve_pbp(pdf: MultiModePdf, dt: float, steps: int = 1, form: str = "printed",
               budget: int = DEFAULT_BUDGET) -> MultiModePdf:
    """Classical RK4 on ``dP/dt = -div F``; raises when ``dt`` breaks the stability bound."""
    _check_budget(pdf.P.shape, budget)
    lim = stable_dt(pdf)
    if dt > lim:
        raise ValueError(f"dt={dt} exceeds the explicit stability bound {lim:.3g}")

    def rate(P):
        q = replace(pdf, P=P)
        return pbp_divergence(pbp_flux(q, form), q)

    P = pdf.P.copy()
    for _ in range(int(steps)):
        k1 = rate(P)
        k2 = rate(P + 0.5 * dt * k1)
        k3 = rate(P + 0.5 * dt * k2)
        k4 = rate(P + dt * k3)
        P = P + dt / 6 * (k1 + 2 * (k2 + k3) + k4)
    return replace(pdf, P=P, time=pdf.time + dt * int(steps))


def marginal_density(pdf: MultiModePdf, j: int) -> np.ndarray:
    """One-mode density of mode ``j`` on its cell centres."""
    axes = tuple(k for k in range(pdf.ndim) if k != j)
    return pdf.P.sum(axis=axes) * np.prod(pdf.h[list(axes)])


def marginal_flux(flux: FluxField, pdf: MultiModePdf, j: int) -> np.ndarray:
    """``F_j`` integrated over all other intensities, on the faces of mode ``j``."""
    axes = tuple(k for k in range(pdf.ndim) if k != j)
    return flux.F[j].sum(axis=axes) * np.prod(pdf.h[list(axes)])


def _center(F, axis):
    F = np.moveaxis(F, axis, 0)
    return np.moveaxis(0.5 * (F[1:] + F[:-1]), 0, axis)


def vortex_projection(flux: FluxField, pdf: MultiModePdf, j1: int, j2: int):
    """Flux components of modes ``j1``, ``j2`` integrated over the other intensities.

    Returns ``(s1, s2, F1, F2)`` on the cell-centre grid, with ``F1[a, b]``
    at ``(s1[a], s2[b])``.
    """
    if j1 == j2:
        raise ValueError("projection needs two distinct modes")
    d = pdf.ndim
    if not (0 <= j1 < d and 0 <= j2 < d):
        raise IndexError("mode index outside the PDF")
    others = tuple(k for k in range(d) if k not in (j1, j2))
    w = np.prod(pdf.h[list(others)]) if others else 1.0

    def proj(F, axis):
        G = _center(F, axis).sum(axis=others) * w
        return G if j1 < j2 else G.T

    c = pdf.centers
    return c[j1], c[j2], proj(flux.F[j1], j1), proj(flux.F[j2], j2)


def circulation(s1, s2, F1, F2, frac=(0.1, 0.6)) -> float:
    """Counter-clockwise line integral of ``(F1, F2)`` around a rectangle.

    The rectangle spans the fractions ``frac`` of each axis' cell range.
    """
    a0, a1 = (int(f * (s1.size - 1)) for f in frac)
    b0, b1 = (int(f * (s2.size - 1)) for f in frac)
    if a1 <= a0 or b1 <= b0:
        raise ValueError("degenerate contour")
    h1 = s1[1] - s1[0]
    h2 = s2[1] - s2[0]
    bottom = F1[a0:a1, b0].sum() * h1
    right = F2[a1, b0:b1].sum() * h2
    top = -F1[a0:a1, b1].sum() * h1
    left = -F2[a0, b0:b1].sum() * h2
    return float(bottom + right + top + left)


def balancing_sources(rset: ResonantSet, n) -> np.ndarray:
    """Source/sink rates ``gamma_tilde = gamma - eta/n`` that make ``n`` a kinetic steady state.

    A spectrum that is not thermodynamic then carries a constant through-flux
    from the forced modes (``gamma_tilde > 0``) to the damped ones.
    """
    n = np.asarray(n, dtype=float)
    eta, gamma = induced_rates(rset, n)
    return gamma - eta / n
