"""Independent reference solutions used to validate the propagator.

Three solvers of increasing generality:

* the closed-form harmonic-oscillator solution in one dimension;
* a Strang split-step Fourier integrator on periodic grids (d <= 2);
* the quasiclassical expectation-value method (phase-space averaging of
  classical symbols over Wigner-sampled, classically propagated points),
  which is exact for quadratic Hamiltonians and serves as the high-d
  reference for energy curves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from .model import PhasePoint, SeparableHamiltonian
from .observables import Observable, potential_observable
from .propagation import IntegratorSpec, _verlet, _steps_for
from .synthesis import GridSpec, WaveField

__all__ = [
    "analytic_harmonic",
    "SplitStepConfig",
    "split_step_evolve",
    "split_step_snapshots",
    "field_energies",
    "lsc_ivr_expectation",
    "lsc_ivr_energies",
]


def analytic_harmonic(x0: float, xi0: float, eps: float, t: float, grid: GridSpec) -> WaveField:
    """Exact solution for ``V(x) = x^2/2`` with a coherent-state initial datum.

    ``psi(t,x) = (pi eps)^(-1/4) exp((i/eps) S(t) - i t/2
    - (x - q(t))^2/(2 eps) + (i/eps) p(t)(x - q(t)))`` with the classical
    centre ``q(t) = x0 cos t + xi0 sin t``, ``p(t) = xi0 cos t - x0 sin t``
    and action ``S(t) = (sin t / 2)((xi0^2 - x0^2) cos t - 2 xi0 x0 sin t)``.
    """
    if grid.dimension != 1:
        raise ValueError("analytic harmonic solution is one-dimensional")
    x = grid.axes()[0]
    qt = x0 * np.cos(t) + xi0 * np.sin(t)
    pt = xi0 * np.cos(t) - x0 * np.sin(t)
    st = 0.5 * np.sin(t) * ((xi0**2 - x0**2) * np.cos(t) - 2.0 * xi0 * x0 * np.sin(t))
    dx = x - qt
    values = (np.pi * eps) ** (-0.25) * np.exp(
        1j * st / eps - 0.5j * t - dx * dx / (2.0 * eps) + 1j * pt * dx / eps
    )
    return WaveField(grid, values, "position", eps, t)


@dataclass(frozen=True)
class SplitStepConfig:
    """Grid, step size and Hamiltonian for the split-step Fourier solver."""

    grid: GridSpec
    tau: float
    hamiltonian: SeparableHamiltonian
    epsilon: float

    def __post_init__(self):
        if not np.all(self.grid.periodic):
            raise ValueError("split-step requires a periodic grid on all axes")
        if np.any(self.grid.n & (self.grid.n - 1)):
            raise ValueError("split-step grid sizes must be powers of two")
        if self.grid.dimension != self.hamiltonian.dimension:
            raise ValueError("grid and Hamiltonian dimensions differ")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


def _split_step_phases(cfg: SplitStepConfig):
    grid = cfg.grid
    mesh = np.meshgrid(*grid.axes(), indexing="ij")
    v = cfg.hamiltonian.potential(np.stack(mesh, axis=-1))
    half_v = np.exp(-0.5j * cfg.tau / cfg.epsilon * v)
    ks = [2.0 * np.pi * np.fft.fftfreq(int(n), d=dx) for n, dx in zip(grid.n, grid.spacing)]
    kmesh = np.meshgrid(*ks, indexing="ij")
    k2 = sum(k * k for k in kmesh)
    # kinetic symbol (eps^2 |k|^2 / 2) applied over tau/eps
    full_t = np.exp(-0.5j * cfg.epsilon * cfg.tau * k2)
    return half_v, full_t


def split_step_snapshots(
    psi0: WaveField, cfg: SplitStepConfig, t_final: float, snapshot_stride: int = 1
) -> Iterator[WaveField]:
    """Strang-splitting evolution, yielding fields at t=0, every stride, and t_final."""
    if psi0.representation != "position":
        raise ValueError("split-step evolves position-representation fields")
    if not psi0.grid.matches(cfg.grid):
        raise ValueError("initial field does not live on the solver grid")
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be at least 1")
    n_steps = _steps_for(t_final, cfg.tau)
    half_v, full_t = _split_step_phases(cfg)
    values = np.asarray(psi0.values, dtype=complex).copy()
    yield WaveField(cfg.grid, values.copy(), "position", cfg.epsilon, 0.0)
    for k in range(1, n_steps + 1):
        values *= half_v
        values = np.fft.ifftn(np.fft.fftn(values) * full_t)
        values *= half_v
        if k % snapshot_stride == 0 or k == n_steps:
            yield WaveField(cfg.grid, values.copy(), "position", cfg.epsilon, k * cfg.tau)


def split_step_evolve(psi0: WaveField, cfg: SplitStepConfig, t_final: float) -> WaveField:
    """Final-time field of the Strang split-step evolution."""
    out = psi0
    for out in split_step_snapshots(psi0, cfg, t_final, snapshot_stride=max(1, _steps_for(t_final, cfg.tau))):
        pass
    return out


def field_energies(field: WaveField, ham: SeparableHamiltonian) -> Tuple[float, float]:
    """Kinetic and potential energy of a grid field (no normalisation applied).

    The kinetic part is evaluated spectrally, so the field should live on a
    periodic grid that resolves its oscillations.
    """
    grid = field.grid
    vol = grid.volume_element
    mesh = np.meshgrid(*grid.axes(), indexing="ij")
    v = ham.potential(np.stack(mesh, axis=-1))
    dens = field.values.real**2 + field.values.imag**2
    epot = float(np.sum(v * dens) * vol)
    ks = [2.0 * np.pi * np.fft.fftfreq(int(n), d=dx) for n, dx in zip(grid.n, grid.spacing)]
    kmesh = np.meshgrid(*ks, indexing="ij")
    k2 = sum(k * k for k in kmesh)
    spec = np.fft.fftn(field.values)
    weight = vol / float(np.prod(grid.n))
    ekin = float(np.sum(0.5 * field.epsilon**2 * k2 * (spec.real**2 + spec.imag**2)) * weight)
    return ekin, epot


def _classical_swarm(
    z0: PhasePoint,
    eps: float,
    ham: SeparableHamiltonian,
    spec: IntegratorSpec,
    m: int,
    t_final: float,
    snapshot_stride: int,
    seed: int,
):
    """Wigner-sampled classical trajectories; yields (t, q, p) at snapshots."""
    if m < 1:
        raise ValueError("need at least one sample")
    n_steps = _steps_for(t_final, spec.tau)
    rng = np.random.default_rng(seed)
    d = z0.dimension
    # Wigner function of a coherent state: Gaussian, variance eps/2 per coordinate
    std = np.sqrt(eps / 2.0)
    q = z0.q + std * rng.standard_normal((m, d))
    p = z0.p + std * rng.standard_normal((m, d))
    yield 0.0, q, p
    for k in range(1, n_steps + 1):
        for c in spec.stages:
            _verlet(q, p, None, None, None, c * spec.tau, ham)
        if k % snapshot_stride == 0 or k == n_steps:
            yield k * spec.tau, q, p


def lsc_ivr_expectation(
    z0: PhasePoint,
    eps: float,
    ham: SeparableHamiltonian,
    obs: Observable,
    spec: IntegratorSpec,
    m: int,
    t_final: float,
    snapshot_stride: int = 1,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Quasiclassical expectation curve E(t_k) for one observable."""
    times, values = [], []
    for t, q, p in _classical_swarm(z0, eps, ham, spec, m, t_final, snapshot_stride, seed):
        times.append(t)
        values.append(float(np.mean(obs.classical_symbol(q, p))))
    return np.asarray(times), np.asarray(values)


def lsc_ivr_energies(
    z0: PhasePoint,
    eps: float,
    ham: SeparableHamiltonian,
    spec: IntegratorSpec,
    m: int,
    t_final: float,
    snapshot_stride: int = 1,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quasiclassical kinetic and potential energy curves from one swarm."""
    kin = Observable.kinetic()
    times, ekin, epot = [], [], []
    for t, q, p in _classical_swarm(z0, eps, ham, spec, m, t_final, snapshot_stride, seed):
        times.append(t)
        ekin.append(float(np.mean(kin.classical_symbol(q, p))))
        epot.append(float(np.mean(ham.potential(q))))
    return np.asarray(times), np.asarray(ekin), np.asarray(epot)
