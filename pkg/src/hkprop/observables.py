"""Analytic Gaussian cross matrix elements and the pair expectation estimator.

All matrix elements use the physics convention
``<g1, O g2> = integral conj(g1(x)) (O g2)(x) dx`` and are expressed as a
scalar factor times the plain overlap ``<g1, g2>``.  Because the packets
factorise over axes, polynomial observables reduce to one-dimensional
moments of a Gaussian with complex centre

    ``zeta_k = (q1_k + q2_k)/2 + i (p2_k - p1_k)/2``

and variance ``eps/2``; the kinetic-energy element is obtained from the
harmonic one through the eps-scaled Fourier rotation ``(q, p) -> (p, -q)``,
under which the identity overlap (including its phase) is invariant.
Closed forms are validated against brute-force quadrature oracles in the
test suite, which is the arbiter for all sign conventions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import PhasePoint, SeparableHamiltonian, henon_heiles_potential
from .propagation import PairedEnsemble

__all__ = [
    "Observable",
    "ExpectationResult",
    "overlap_identity",
    "overlap_harmonic",
    "overlap_kinetic",
    "overlap_torsional",
    "overlap_polynomial",
    "overlap_henon_heiles",
    "expectation",
    "potential_observable",
]

OBSERVABLE_KINDS = (
    "identity",
    "position_sq_half",
    "kinetic",
    "torsional",
    "henon_heiles_potential",
)


def _qp(z):
    if isinstance(z, PhasePoint):
        return z.q, z.p
    q, p = z
    return np.asarray(q, dtype=float), np.asarray(p, dtype=float)


def _maybe_scalar(value, scalar: bool):
    return complex(value) if scalar else value


def overlap_identity(z1, z2, eps: float):
    """Overlap ``<g_{z1}, g_{z2}>`` of two packets with common width.

    ``exp(-|z1-z2|^2/(4 eps) + (i/(2 eps)) (p1+p2).(q1-q2))``.
    """
    q1, p1 = _qp(z1)
    q2, p2 = _qp(z2)
    scalar = q1.ndim == 1
    dq = q1 - q2
    dp = p1 - p2
    expo = -(np.sum(dq * dq, axis=-1) + np.sum(dp * dp, axis=-1)) / (4.0 * eps)
    phase = np.sum((p1 + p2) * dq, axis=-1) / (2.0 * eps)
    return _maybe_scalar(np.exp(expo + 1j * phase), scalar)


def _harmonic_factor(q1, p1, q2, p2, eps):
    w = (p1 - p2) + 1j * (q1 + q2)
    return np.sum(2.0 * eps - w * w, axis=-1) / 8.0


def overlap_harmonic(z1, z2, eps: float):
    """Matrix element of ``|x|^2 / 2`` between two packets."""
    q1, p1 = _qp(z1)
    q2, p2 = _qp(z2)
    scalar = q1.ndim == 1
    val = _harmonic_factor(q1, p1, q2, p2, eps) * overlap_identity((q1, p1), (q2, p2), eps)
    return _maybe_scalar(val, scalar)


def overlap_kinetic(z1, z2, eps: float):
    """Matrix element of ``-(eps^2/2) Laplacian`` between two packets.

    Computed by Fourier duality: the harmonic factor evaluated on the
    rotated points ``(p, -q)`` multiplies the identity overlap of the
    original points.
    """
    q1, p1 = _qp(z1)
    q2, p2 = _qp(z2)
    scalar = q1.ndim == 1
    factor = _harmonic_factor(p1, -q1, p2, -q2, eps)
    val = factor * overlap_identity((q1, p1), (q2, p2), eps)
    return _maybe_scalar(val, scalar)


def overlap_torsional(z1, z2, eps: float):
    """Matrix element of ``sum_k (1 - cos x_k)`` between two packets."""
    q1, p1 = _qp(z1)
    q2, p2 = _qp(z2)
    scalar = q1.ndim == 1
    arg = 0.5 * (p1 - p2) + 0.5j * (q1 + q2)
    factor = np.sum(1.0 - np.exp(-eps / 4.0) * np.cosh(arg), axis=-1)
    val = factor * overlap_identity((q1, p1), (q2, p2), eps)
    return _maybe_scalar(val, scalar)


def _moments(q1, p1, q2, p2, eps, max_power: int):
    """Per-axis moments E[x^n] of the complex-centre Gaussian, n = 0..max_power."""
    zeta = 0.5 * (q1 + q2) + 0.5j * (p2 - p1)
    s = eps / 2.0
    moments = [np.ones_like(zeta, dtype=complex), zeta.astype(complex)]
    if max_power >= 2:
        moments.append(zeta * zeta + s)
    if max_power >= 3:
        moments.append(zeta**3 + 3.0 * s * zeta)
    if max_power >= 4:
        moments.append(zeta**4 + 6.0 * s * zeta * zeta + 3.0 * s * s)
    return moments


def overlap_polynomial(z1, z2, eps: float, powers: Sequence[int]):
    """Matrix element of the monomial ``prod_k x_k^powers[k]`` (total degree <= 4)."""
    q1, p1 = _qp(z1)
    q2, p2 = _qp(z2)
    scalar = q1.ndim == 1
    powers = tuple(int(a) for a in powers)
    if len(powers) != q1.shape[-1]:
        raise ValueError(f"need one power per axis, got {powers} for d={q1.shape[-1]}")
    if any(a < 0 for a in powers) or sum(powers) > 4:
        raise ValueError(f"monomial degree must be between 0 and 4, got {powers}")
    m = _moments(q1, p1, q2, p2, eps, max(powers, default=0))
    factor = np.ones(q1.shape[:-1], dtype=complex)
    for k, a in enumerate(powers):
        if a > 0:
            factor = factor * m[a][..., k]
    val = factor * overlap_identity((q1, p1), (q2, p2), eps)
    return _maybe_scalar(val, scalar)


def overlap_henon_heiles(z1, z2, eps: float, sigma: float):
    """Matrix element of the Henon-Heiles potential, assembled term-wise."""
    q1, p1 = _qp(z1)
    q2, p2 = _qp(z2)
    scalar = q1.ndim == 1
    m = _moments(q1, p1, q2, p2, eps, 4)
    m1, m2, m3, m4 = m[1], m[2], m[3], m[4]
    factor = 0.5 * np.sum(m2, axis=-1)
    factor = factor + sigma * np.sum(
        m1[..., :-1] * m2[..., 1:] - m3[..., :-1] / 3.0, axis=-1
    )
    factor = factor + sigma**2 / 16.0 * np.sum(
        m4[..., :-1] + 2.0 * m2[..., :-1] * m2[..., 1:] + m4[..., 1:], axis=-1
    )
    val = factor * overlap_identity((q1, p1), (q2, p2), eps)
    return _maybe_scalar(val, scalar)


@dataclass(frozen=True)
class Observable:
    """Self-adjoint observable with a closed-form cross matrix element."""

    kind: str
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in OBSERVABLE_KINDS:
            raise ValueError(f"unknown observable {self.kind!r}; known: {OBSERVABLE_KINDS}")
        if self.kind == "henon_heiles_potential" and self.sigma is None:
            raise ValueError("henon_heiles_potential requires sigma")

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def position_sq_half(cls):
        return cls("position_sq_half")

    @classmethod
    def kinetic(cls):
        return cls("kinetic")

    @classmethod
    def torsional(cls):
        return cls("torsional")

    @classmethod
    def henon_heiles(cls, sigma: float):
        return cls("henon_heiles_potential", sigma=float(sigma))

    def matrix_element(self, z1, z2, eps: float):
        if self.kind == "identity":
            return overlap_identity(z1, z2, eps)
        if self.kind == "position_sq_half":
            return overlap_harmonic(z1, z2, eps)
        if self.kind == "kinetic":
            return overlap_kinetic(z1, z2, eps)
        if self.kind == "torsional":
            return overlap_torsional(z1, z2, eps)
        return overlap_henon_heiles(z1, z2, eps, self.sigma)

    def classical_symbol(self, q, p):
        """Phase-space symbol of the observable (for quasiclassical averaging)."""
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        if self.kind == "identity":
            return np.ones(q.shape[:-1])
        if self.kind == "position_sq_half":
            return 0.5 * np.sum(q * q, axis=-1)
        if self.kind == "kinetic":
            return 0.5 * np.sum(p * p, axis=-1)
        if self.kind == "torsional":
            return np.sum(1.0 - np.cos(q), axis=-1)
        return henon_heiles_potential(q.shape[-1], self.sigma).potential(q)


def potential_observable(ham: SeparableHamiltonian) -> Observable:
    """The potential-energy observable matching a registered Hamiltonian."""
    if ham.name == "harmonic":
        return Observable.position_sq_half()
    if ham.name == "torsional":
        return Observable.torsional()
    if ham.name == "henon_heiles":
        return Observable.henon_heiles(ham.parameters["sigma"])
    raise ValueError(f"no closed-form potential element for {ham.name!r}")


@dataclass(frozen=True)
class ExpectationResult:
    """Real expectation estimate plus the imaginary residue diagnostic."""

    value: float
    imag_residue: float


def expectation(pairs: PairedEnsemble, obs: Observable) -> ExpectationResult:
    """Off-grid estimator of ``<psi(t), O psi(t)>`` on a paired ensemble.

    ``A_M(t) = (1/M) sum_m conj(f_m^w) f_m^z <g_{w_m(t)}, O g_{z_m(t)}>``
    with ``f = r0 u exp(i S / eps)``.  The exact value is real for
    self-adjoint observables; the leftover imaginary part is returned as a
    diagnostic.  Pairs are consumed strictly in plan order.
    """
    if not isinstance(pairs, PairedEnsemble):
        raise TypeError(
            "expectation requires a paired ensemble (build the plan with sample_pairs)"
        )
    eps = pairs.epsilon
    fw = pairs.w.coefficients()
    fz = pairs.z.coefficients()
    me = obs.matrix_element((pairs.w.q, pairs.w.p), (pairs.z.q, pairs.z.p), eps)
    total = np.sum(np.conj(fw) * fz * me) / pairs.size
    return ExpectationResult(value=float(total.real), imag_residue=float(abs(total.imag)))
