"""Dispersion laws and interaction coefficients of the example wave systems.

Three-wave systems (capillary, Rossby) expose :meth:`WaveSystem.coupling3`;
four-wave systems (NLS, custom quartic) expose :meth:`WaveSystem.coupling4`.
All functions are vectorized over leading axes: wavevectors are arrays of
shape ``(..., d)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "WaveSystem",
    "capillary",
    "rossby",
    "nls",
    "gravity",
    "custom",
    "dispersion",
    "coupling3",
    "coupling4",
]

_KINDS = {"capillary": 3, "rossby": 3, "nls": 4, "gravity": None, "custom": None}


@dataclass(frozen=True)
class WaveSystem:
    """A weakly nonlinear wave system.

    Parameters
    ----------
    kind : {'capillary', 'rossby', 'nls', 'gravity', 'custom'}
    epsilon : float
        Nonlinearity parameter; values above 0.3 leave the asymptotic regime
        and trigger a warning.
    sigma : float, optional
        Surface tension coefficient (capillary).
    beta, rho : float, optional
        Coriolis gradient and deformation radius (Rossby).
    g : float, optional
        Gravity (dispersion only).
    order : int, optional
        Interaction order for custom systems (3 or 4).
    omega_fn, coupling_fn : callable, optional
        Custom dispersion ``omega_fn(k)`` and coupling.  A three-wave custom
        coupling is called as ``coupling_fn(kl, km, kn)``; a four-wave one as
        ``coupling_fn(kl, km, kmu, knu)`` and is symmetrized under
        ``l <-> m`` and ``mu <-> nu``.
    """

    kind: str
    epsilon: float = 0.1
    sigma: Optional[float] = None
    beta: Optional[float] = None
    rho: Optional[float] = None
    g: Optional[float] = None
    order: Optional[int] = None
    omega_fn: Optional[Callable] = None
    coupling_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown system kind {self.kind!r}; expected one of {sorted(_KINDS)}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.epsilon > 0.3:
            warnings.warn(f"epsilon={self.epsilon} is outside the weakly nonlinear regime",
                          RuntimeWarning, stacklevel=3)
        need = {"capillary": ("sigma",), "rossby": ("beta", "rho"), "gravity": ("g",),
                "custom": ("omega_fn",), "nls": ()}[self.kind]
        for name in need:
            if getattr(self, name) is None:
                raise ValueError(f"{self.kind} system requires parameter {name!r}")
        for name in ("sigma", "beta", "g"):
            val = getattr(self, name)
            if val is not None and name in need and not val > 0:
                raise ValueError(f"parameter {name} must be positive, got {val}")
        if self.kind == "rossby" and not self.rho >= 0:
            raise ValueError(f"parameter rho must be nonnegative, got {self.rho}")
        default = _KINDS[self.kind]
        if self.kind == "custom":
            if self.order not in (3, 4, None):
                raise ValueError(f"custom order must be 3 or 4, got {self.order}")
        elif self.order is not None and self.order != default:
            raise ValueError(f"{self.kind} systems have interaction order {default}")
        object.__setattr__(self, "order", self.order if self.kind == "custom" else default)

    def with_epsilon(self, epsilon: float) -> "WaveSystem":
        params = {f: getattr(self, f) for f in self.__dataclass_fields__}
        params["epsilon"] = epsilon
        return WaveSystem(**params)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "epsilon": self.epsilon}
        for name in ("sigma", "beta", "rho", "g"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        return out

    # -- dispersion ---------------------------------------------------------
    def dispersion(self, k) -> np.ndarray:
        """Linear frequency of wavevector(s) ``k`` (last axis is the dimension)."""
        k = np.asarray(k, dtype=float)
        if k.ndim == 0:
            k = k[None]
        kk = np.sqrt(np.sum(k * k, axis=-1))
        if self.kind == "capillary":
            return np.sqrt(self.sigma * kk**3)
        if self.kind == "nls":
            return kk**2
        if self.kind == "gravity":
            return np.sqrt(self.g * kk)
        if self.kind == "rossby":
            if k.shape[-1] != 2:
                raise ValueError("Rossby waves are defined on a 2-D lattice")
            return self.beta * k[..., 0] / (1 + self.rho**2 * kk**2)
        return np.asarray(self.omega_fn(k), dtype=float)

    # -- couplings ----------------------------------------------------------
    def coupling3(self, kl, km, kn) -> np.ndarray:
        """Three-wave coefficient ``V^l_{mn}``; zero if any argument is zero."""
        if self.order != 3:
            raise TypeError(f"coupling3 called on a {self.order}-wave system ({self.kind})")
        kl, km, kn = (np.asarray(x, dtype=float) for x in (kl, km, kn))
        norms = [np.sqrt(np.sum(x * x, axis=-1)) for x in (kl, km, kn)]
        zero = (norms[0] == 0) | (norms[1] == 0) | (norms[2] == 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "capillary":
                V = self._capillary_v(kl, km, kn, *norms)
            elif self.kind == "rossby":
                V = self._rossby_v(kl, km, kn, *norms)
            else:
                V = np.asarray(self.coupling_fn(kl, km, kn), dtype=complex)
        V = np.where(zero, 0.0, V).astype(complex)
        return V

    def _capillary_v(self, kl, km, kn, al, am, an):
        def L(a, b, na, nb):
            return np.sum(a * b, axis=-1) + na * nb

        w = np.sqrt(self.sigma * np.stack([al, am, an]) ** 3)
        bracket = (L(km, kn, am, an) / (np.sqrt(am * an) * al)
                   - L(kl, -km, al, am) / (np.sqrt(al * am) * an)
                   - L(kl, -kn, al, an) / (np.sqrt(al * an) * am))
        return np.sqrt(w[0] * w[1] * w[2]) * bracket / (8 * np.pi * np.sqrt(2 * self.sigma))

    def _rossby_v(self, kl, km, kn, al, am, an):
        r2 = self.rho**2
        pref = -1j * self.beta / (4 * np.pi) * np.sqrt(np.abs(kl[..., 0] * km[..., 0] * kn[..., 0]))
        return pref * (kl[..., 1] / (1 + r2 * al**2) - km[..., 1] / (1 + r2 * am**2)
                       - kn[..., 1] / (1 + r2 * an**2))

    def coupling4(self, kl, km, kmu, knu) -> np.ndarray:
        """Four-wave coefficient ``W^{lm}_{mu nu}``; zero if any argument is zero."""
        if self.order != 4:
            raise TypeError(f"coupling4 called on a {self.order}-wave system ({self.kind})")
        args = [np.asarray(x, dtype=float) for x in (kl, km, kmu, knu)]
        shape = np.broadcast_shapes(*(a.shape[:-1] for a in args))
        zero = np.zeros(shape, dtype=bool)
        for a in args:
            zero |= ~np.any(a != 0, axis=-1)
        if self.kind == "nls":
            W = np.ones(shape, dtype=complex)
        else:
            f = self.coupling_fn
            kl, km, kmu, knu = args
            W = 0.25 * (np.asarray(f(kl, km, kmu, knu), dtype=complex)
                        + np.asarray(f(km, kl, kmu, knu), dtype=complex)
                        + np.asarray(f(kl, km, knu, kmu), dtype=complex)
                        + np.asarray(f(km, kl, knu, kmu), dtype=complex))
        return np.where(zero, 0.0, W)


def capillary(sigma: float = 1.0, epsilon: float = 0.1) -> WaveSystem:
    return WaveSystem("capillary", epsilon=epsilon, sigma=sigma)


def rossby(beta: float = 1.0, rho: float = 1.0, epsilon: float = 0.1) -> WaveSystem:
    return WaveSystem("rossby", epsilon=epsilon, beta=beta, rho=rho)


def nls(epsilon: float = 0.1) -> WaveSystem:
    return WaveSystem("nls", epsilon=epsilon)


def gravity(g: float = 9.81, epsilon: float = 0.1) -> WaveSystem:
    """Deep-water gravity waves; dispersion only, no coupling is provided."""
    return WaveSystem("gravity", epsilon=epsilon, g=g)


def custom(omega_fn, coupling_fn, order: int, epsilon: float = 0.1) -> WaveSystem:
    return WaveSystem("custom", epsilon=epsilon, order=order, omega_fn=omega_fn,
                      coupling_fn=coupling_fn)


def dispersion(system: WaveSystem, k) -> np.ndarray:
    return system.dispersion(k)


def coupling3(system: WaveSystem, kl, km, kn) -> np.ndarray:
    return system.coupling3(kl, km, kn)


def coupling4(system: WaveSystem, kl, km, kmu, knu) -> np.ndarray:
    return system.coupling4(kl, km, kmu, knu)
