"""Phase-space domain types, frozen Gaussian wave packets, and model potentials.

Conventions used throughout the package:

* a phase-space point is ``z = (q, p)`` with ``q, p`` real vectors of length ``d``;
* the semiclassical parameter ``eps`` plays the role of an effective
  Planck constant;
* the kinetic energy is ``T(p) = |p|^2 / 2`` (unit masses);
* a frozen Gaussian centred at ``z`` is

  ``g(x) = (pi*eps)^(-d/4) * exp(-|x-q|^2/(2 eps) + (i/eps) p.(x-q))``

  which is L2-normalised for every ``z`` and ``eps > 0``.

Potential evaluators are vectorised: they accept position arrays of shape
``(..., d)`` and return values of shape ``(...)``, gradients of shape
``(..., d)`` and Hessians of shape ``(..., d, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "PhasePoint",
    "GaussianPacket",
    "SeparableHamiltonian",
    "eval_packet",
    "packet_fourier_image",
    "harmonic_potential",
    "torsional_potential",
    "henon_heiles_potential",
    "make_potential",
    "POTENTIALS",
]


def _as_vector(x, name: str) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-d real vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    return v


@dataclass(frozen=True)
class PhasePoint:
    """A point ``z = (q, p)`` in 2d-dimensional classical phase space."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = _as_vector(self.q, "q")
        p = _as_vector(self.p, "p")
        if q.shape != p.shape:
            raise ValueError(f"q and p must have equal length, got {q.shape} and {p.shape}")
        if q.size < 1:
            raise ValueError("phase space dimension must be at least 1")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def dimension(self) -> int:
        return self.q.size

    def as_vector(self) -> np.ndarray:
        """Stacked representation ``(q_1..q_d, p_1..p_d)``."""
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_vector(cls, z) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        d = z.size // 2
        return cls(z[:d], z[d:])


@dataclass(frozen=True)
class GaussianPacket:
    """Frozen-width coherent state parametrised by centre and ``eps``."""

    center: PhasePoint
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def dimension(self) -> int:
        return self.center.dimension


def eval_packet(packet: GaussianPacket, x) -> np.ndarray:
    """Evaluate a frozen Gaussian at position(s) ``x``.

    Parameters
    ----------
    packet : GaussianPacket
    x : array_like, shape (d,) or (..., d)

    Returns
    -------
    complex scalar or array of shape (...)
    """
    q, p, eps = packet.center.q, packet.center.p, packet.epsilon
    d = packet.dimension
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    if x.shape[-1] != d:
        raise ValueError(f"x must have trailing dimension {d}, got shape {x.shape}")
    dx = x - q
    expo = -np.sum(dx * dx, axis=-1) / (2.0 * eps) + 1j / eps * np.sum(p * dx, axis=-1)
    val = (np.pi * eps) ** (-d / 4.0) * np.exp(expo)
    return complex(val) if scalar else val


def packet_fourier_image(packet: GaussianPacket):
    """Image of a packet under the eps-scaled Fourier transform.

    A packet centred at ``(q, p)`` maps to the packet centred at ``(p, -q)``
    times the global phase ``exp(-i p.q / eps)``.

    Returns
    -------
    (phase, image) : (complex, GaussianPacket)
    """
    q, p, eps = packet.center.q, packet.center.p, packet.epsilon
    phase = np.exp(-1j / eps * float(np.dot(p, q)))
    image = GaussianPacket(PhasePoint(p.copy(), -q.copy()), eps)
    return complex(phase), image


@dataclass(frozen=True)
class SeparableHamiltonian:
    """Classical Hamiltonian ``h(q, p) = |p|^2/2 + V(q)`` with analytic derivatives.

    Attributes
    ----------
    name : str
        Registry tag ("harmonic", "torsional", ...).
    dimension : int
    potential, gradient, hessian : callables
        Vectorised evaluators of V, grad V and the Hessian of V.
    hessian_apply : callable, optional
        Fast evaluator of ``hess(q) @ X`` for ``X`` of shape (..., d, m);
        defaults to forming the dense Hessian.
    """

    name: str
    dimension: int
    potential: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    hessian_apply: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be at least 1")
        if self.hessian_apply is None:
            object.__setattr__(
                self, "hessian_apply", lambda q, x: np.matmul(self.hessian(q), x)
            )

    def kinetic(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return 0.5 * np.sum(p * p, axis=-1)

    def total(self, q, p) -> np.ndarray:
        return self.kinetic(p) + self.potential(np.asarray(q, dtype=float))


def harmonic_potential(dimension: int) -> SeparableHamiltonian:
    """Isotropic harmonic well ``V(q) = |q|^2 / 2``."""
    if dimension < 1:
        raise ValueError("dimension must be at least 1")
    d = dimension
    eye = np.eye(d)

    def potential(q):
        q = np.asarray(q, dtype=float)
        return 0.5 * np.sum(q * q, axis=-1)

    def gradient(q):
        return np.array(q, dtype=float, copy=True)

    def hessian(q):
        q = np.asarray(q, dtype=float)
        return np.broadcast_to(eye, q.shape[:-1] + (d, d)).copy()

    def hessian_apply(q, x):
        return np.array(x, copy=True)

    return SeparableHamiltonian("harmonic", d, potential, gradient, hessian, hessian_apply)


def torsional_potential(dimension: int) -> SeparableHamiltonian:
    """Torsional well ``V(q) = sum_k (1 - cos q_k)``."""
    if dimension < 1:
        raise ValueError("dimension must be at least 1")
    d = dimension

    def potential(q):
        q = np.asarray(q, dtype=float)
        return np.sum(1.0 - np.cos(q), axis=-1)

    def gradient(q):
        return np.sin(np.asarray(q, dtype=float))

    def hessian(q):
        q = np.asarray(q, dtype=float)
        h = np.zeros(q.shape[:-1] + (d, d))
        idx = np.arange(d)
        h[..., idx, idx] = np.cos(q)
        return h

    def hessian_apply(q, x):
        # diagonal Hessian: elementwise row scaling
        q = np.asarray(q, dtype=float)
        return np.cos(q)[..., :, None] * x

    return SeparableHamiltonian("torsional", d, potential, gradient, hessian, hessian_apply)


def henon_heiles_potential(dimension: int, sigma: float) -> SeparableHamiltonian:
    """Henon-Heiles chain with cubic coupling ``sigma`` and quartic confinement.

    ``V(q) = sum_k q_k^2/2 + sigma * sum_k (q_k q_{k+1}^2 - q_k^3/3)
    + (sigma^2/16) * sum_k (q_k^2 + q_{k+1}^2)^2`` with the coupling sums
    running over ``k = 1..d-1``.
    """
    if dimension < 2:
        raise ValueError("henon_heiles requires dimension >= 2")
    d = dimension
    sig = float(sigma)

    def potential(q):
        q = np.asarray(q, dtype=float)
        a, b = q[..., :-1], q[..., 1:]
        v = 0.5 * np.sum(q * q, axis=-1)
        v = v + sig * np.sum(a * b * b - a**3 / 3.0, axis=-1)
        v = v + sig**2 / 16.0 * np.sum((a * a + b * b) ** 2, axis=-1)
        return v

    def gradient(q):
        q = np.asarray(q, dtype=float)
        g = np.array(q, copy=True)
        a, b = q[..., :-1], q[..., 1:]
        # cubic coupling: d/da (a b^2 - a^3/3) = b^2 - a^2, d/db = 2 a b
        g[..., :-1] += sig * (b * b - a * a)
        g[..., 1:] += sig * 2.0 * a * b
        # quartic confinement: d/da (a^2+b^2)^2 = 4 a (a^2+b^2)
        s2 = a * a + b * b
        g[..., :-1] += sig**2 / 4.0 * a * s2
        g[..., 1:] += sig**2 / 4.0 * b * s2
        return g

    def _tridiagonal(q):
        # returns (diag, off) with off[k] = H[k, k+1]
        q = np.asarray(q, dtype=float)
        a, b = q[..., :-1], q[..., 1:]
        diag = np.ones(q.shape)
        diag[..., :-1] += -2.0 * sig * a + sig**2 / 4.0 * (3.0 * a * a + b * b)
        diag[..., 1:] += 2.0 * sig * a + sig**2 / 4.0 * (a * a + 3.0 * b * b)
        off = 2.0 * sig * b + sig**2 / 2.0 * a * b
        return diag, off

    def hessian(q):
        diag, off = _tridiagonal(q)
        h = np.zeros(diag.shape + (d,))
        idx = np.arange(d)
        h[..., idx, idx] = diag
        h[..., idx[:-1], idx[1:]] = off
        h[..., idx[1:], idx[:-1]] = off
        return h

    def hessian_apply(q, x):
        diag, off = _tridiagonal(q)
        y = diag[..., :, None] * x
        y[..., :-1, :] += off[..., :, None] * x[..., 1:, :]
        y[..., 1:, :] += off[..., :, None] * x[..., :-1, :]
        return y

    return SeparableHamiltonian(
        "henon_heiles", d, potential, gradient, hessian, hessian_apply,
        parameters={"sigma": sig},
    )


POTENTIALS = {
    "harmonic": harmonic_potential,
    "torsional": torsional_potential,
    "henon_heiles": henon_heiles_potential,
}


def make_potential(name: str, dimension: int, **params) -> SeparableHamiltonian:
    """Build a registered potential by name ("harmonic", "torsional", "henon_heiles")."""
    try:
        factory = POTENTIALS[name]
    except KeyError:
        raise ValueError(f"unknown potential {name!r}; known: {sorted(POTENTIALS)}") from None
    return factory(dimension, **params)
