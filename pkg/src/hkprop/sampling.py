"""Phase-space sampling for the propagator's weighted quadrature.

A Gaussian initial state centred at ``z0`` factorises its coherent-state
overlap as ``(2 pi eps)^-d <g_z, psi0> = r0(z) mu0(z)`` with

* ``mu0``: Gaussian probability density on R^{2d} with mean ``z0`` and
  covariance ``2 eps I`` (the sampling measure), and
* ``r0(z) = 2^d exp((i / 2 eps) (p + p0).(q - q0))``: a unimodular-phase
  weight of constant modulus ``2^d``.

Sample sets are drawn either by seeded Monte Carlo or by deterministic
quasi-Monte Carlo (Halton points mapped through the inverse normal CDF).
Expectation-value runs sample pairs ``(w, z)`` from the product measure
``mu0 (x) mu0`` using a single sequence in dimension 4d.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr, ndtri

from .model import PhasePoint

__all__ = [
    "FbiDecomposition",
    "SamplePlan",
    "decompose_gaussian_initial",
    "first_primes",
    "halton",
    "sample_mc",
    "sample_qmc",
    "sample_pairs",
    "initial_variance_gaussian",
    "GaussianDensity1d",
    "koksma_hlawka_residual_1d",
    "QuadratureError",
]


@dataclass(frozen=True)
class FbiDecomposition:
    """Multiplicative decomposition ``r0 * mu0`` of a Gaussian initial state."""

    z0: PhasePoint
    epsilon: float

    @property
    def dimension(self) -> int:
        return self.z0.dimension

    def mu0_density(self, points) -> np.ndarray:
        """Sampling density at stacked phase-space points of shape (..., 2d)."""
        z = np.asarray(points, dtype=float)
        dz = z - self.z0.as_vector()
        d = self.dimension
        norm = (4.0 * np.pi * self.epsilon) ** (-d)
        return norm * np.exp(-np.sum(dz * dz, axis=-1) / (4.0 * self.epsilon))

    def r0(self, points) -> np.ndarray:
        """Complex weight at stacked phase-space points of shape (..., 2d)."""
        z = np.asarray(points, dtype=float)
        d = self.dimension
        q = z[..., :d]
        p = z[..., d:]
        phase = np.sum((p + self.z0.p) * (q - self.z0.q), axis=-1)
        return 2.0**d * np.exp(0.5j / self.epsilon * phase)


def decompose_gaussian_initial(z0: PhasePoint, epsilon: float) -> FbiDecomposition:
    """Decomposition of the coherent-state overlap of a Gaussian initial state."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return FbiDecomposition(z0=z0, epsilon=float(epsilon))


@dataclass(frozen=True)
class SamplePlan:
    """A deterministic set of weighted quadrature nodes in phase space.

    ``points`` has shape (M, 2d) in wavefunction mode and (M, 4d) in
    expectation mode (a pair ``(w, z)`` per row); ``r0_values`` carries the
    weight per point, or per pair component as an (M, 2) array.  All nodes
    enter estimators with uniform weight 1/M.
    """

    points: np.ndarray
    r0_values: np.ndarray
    mode: str  # "wavefunction" | "expectation"
    sampler: str  # "mc" | "qmc"
    epsilon: float
    z0: PhasePoint
    seed: Optional[int] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("points must be a (M, k) array with M >= 1")
        if not np.all(np.isfinite(pts)):
            raise ValueError("sample points must be finite")
        if self.mode not in ("wavefunction", "expectation"):
            raise ValueError(f"unknown mode {self.mode!r}")
        width = 2 * self.z0.dimension * (2 if self.mode == "expectation" else 1)
        if pts.shape[1] != width:
            raise ValueError(f"points must have width {width}, got {pts.shape[1]}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "r0_values", np.asarray(self.r0_values))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.z0.dimension

    def write_text(self, path) -> None:
        """Dump nodes one per row, components space-separated (debug format)."""
        np.savetxt(path, self.points, fmt="%.17g")


def first_primes(count: int) -> list[int]:
    primes: list[int] = []
    candidate = 2
    while len(primes) < count:
        if all(candidate % p for p in primes):
            primes.append(candidate)
        candidate += 1
    return primes


def halton(n_points: int, n_dims: int) -> np.ndarray:
    """First ``n_points`` Halton points in (0,1)^n_dims, bases the first primes.

    Index 0 (the all-zero point) is skipped: the base-2 column starts
    1/2, 1/4, 3/4, ...
    """
    if n_points < 1 or n_dims < 1:
        raise ValueError("n_points and n_dims must be positive")
    out = np.empty((n_points, n_dims))
    indices = np.arange(1, n_points + 1, dtype=np.int64)
    for col, base in enumerate(first_primes(n_dims)):
        result = np.zeros(n_points)
        f = 1.0 / base
        i = indices.copy()
        while np.any(i > 0):
            result += f * (i % base)
            i //= base
            f /= base
        out[:, col] = result
    return out


def _gaussian_map(u: np.ndarray, dec: FbiDecomposition, copies: int) -> np.ndarray:
    """Map uniform variates through the inverse normal CDF onto mu0 (per copy)."""
    std = np.sqrt(2.0 * dec.epsilon)
    center = np.tile(dec.z0.as_vector(), copies)
    return center + std * ndtri(u)


def sample_mc(dec: FbiDecomposition, m: int, seed: int) -> SamplePlan:
    """Draw M i.i.d. points from mu0 with a seeded generator (deterministic)."""
    if m < 1:
        raise ValueError("sample count must be at least 1")
    rng = np.random.default_rng(seed)
    std = np.sqrt(2.0 * dec.epsilon)
    points = dec.z0.as_vector() + std * rng.standard_normal((m, 2 * dec.dimension))
    return SamplePlan(points, dec.r0(points), "wavefunction", "mc", dec.epsilon, dec.z0, seed)


def sample_qmc(dec: FbiDecomposition, m: int) -> SamplePlan:
    """First M Halton points in dimension 2d mapped onto mu0 (pure, no seed)."""
    if m < 1:
        raise ValueError("sample count must be at least 1")
    u = halton(m, 2 * dec.dimension)
    points = _gaussian_map(u, dec, copies=1)
    return SamplePlan(points, dec.r0(points), "wavefunction", "qmc", dec.epsilon, dec.z0)


def sample_pairs(dec: FbiDecomposition, m: int, sampler: str, seed: Optional[int] = None) -> SamplePlan:
    """Sample M pairs ``(w, z)`` from the product measure mu0 (x) mu0.

    QMC uses one Halton sequence in dimension 4d rather than two independent
    2d sequences.
    """
    if m < 1:
        raise ValueError("sample count must be at least 1")
    width = 2 * dec.dimension
    if sampler == "mc":
        if seed is None:
            raise ValueError("mc pair sampling requires a seed")
        rng = np.random.default_rng(seed)
        std = np.sqrt(2.0 * dec.epsilon)
        center = np.tile(dec.z0.as_vector(), 2)
        points = center + std * rng.standard_normal((m, 2 * width))
    elif sampler == "qmc":
        u = halton(m, 2 * width)
        points = _gaussian_map(u, dec, copies=2)
        seed = None
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    r0 = np.stack([dec.r0(points[:, :width]), dec.r0(points[:, width:])], axis=1)
    return SamplePlan(points, r0, "expectation", sampler, dec.epsilon, dec.z0, seed)


def initial_variance_gaussian(dimension: int) -> float:
    """Normalised t=0 variance ``1 - 4^-d`` of the sampling integrand.

    This is the weight-normalised value (the integrand divided by its
    constant modulus ``2^d``); the unnormalised integrand has variance
    ``4^d - 1``, which is what the raw sampling error of the estimator
    follows.  Both are independent of ``eps``.
    """
    if dimension < 1:
        raise ValueError("dimension must be at least 1")
    return 1.0 - 4.0 ** (-dimension)


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested accuracy."""


@dataclass(frozen=True)
class GaussianDensity1d:
    """One-dimensional normal density with closed-form CDF."""

    mean: float = 0.0
    std: float = 1.0

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - self.mean) / self.std
        return np.exp(-0.5 * u * u) / (self.std * np.sqrt(2.0 * np.pi))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return ndtr((x - self.mean) / self.std)


def koksma_hlawka_residual_1d(
    f: Callable[[float], float],
    fprime: Callable[[float], float],
    density: GaussianDensity1d,
    points,
    quad_tol: float = 1e-11,
) -> float:
    """Residual of the exact quadrature-error identity in one dimension.

    For integrable, decaying ``f`` the sample mean satisfies

        ``mean_M f - int f dmu = - int f'(y) D_M(y) dy``

    with the discrepancy ``D_M(y) = (1/M) sum_m 1[x_m <= y] - mu((-inf, y])``.
    Both sides are evaluated with adaptive quadrature (the right-hand side
    piecewise between the sorted sample points, where ``D_M`` is smooth) and
    the absolute difference is returned; it consists of quadrature noise only.

    Raises
    ------
    QuadratureError
        if the accumulated quadrature error estimate exceeds ``1e-9``.
    """
    xs = np.sort(np.asarray(points, dtype=float))
    m = xs.size
    if m < 1:
        raise ValueError("need at least one sample point")

    mean = float(np.mean([f(x) for x in xs]))

    est_err = 0.0
    val, err = quad(lambda x: f(x) * density.pdf(x), -np.inf, np.inf,
                    epsabs=quad_tol, epsrel=quad_tol, limit=400)
    integral = val
    est_err += err

    # D_M is smooth between consecutive sample points; integrate segment-wise
    edges = np.concatenate([[-np.inf], xs, [np.inf]])
    correction = 0.0
    for k in range(m + 1):
        lo, hi = edges[k], edges[k + 1]
        if lo == hi:
            continue
        count = k / m

        def integrand(y, c=count):
            return fprime(y) * (c - density.cdf(y))

        val, err = quad(integrand, lo, hi, epsabs=quad_tol, epsrel=quad_tol, limit=400)
        correction += val
        est_err += err

    if est_err > 1e-9:
        raise QuadratureError(
            f"quadrature error estimate {est_err:.2e} too large for a reliable residual"
        )
    return abs(mean - integral + correction)
