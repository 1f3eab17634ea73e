import numpy as np
import pytest

from hkprop.model import GaussianPacket, PhasePoint, make_potential
from hkprop.observables import Observable
from hkprop.propagation import IntegratorSpec
from hkprop.reference import (
    SplitStepConfig,
    analytic_harmonic,
    field_energies,
    lsc_ivr_energies,
    lsc_ivr_expectation,
    split_step_evolve,
    split_step_snapshots,
)
from hkprop.synthesis import GridSpec, WaveField, l2_error, l2_norm, packet_field


def periodic_grid(n=512, d=1, half=np.pi):
    return GridSpec.cube(d, -half, half, n, periodic=True)


def free_gaussian(t, x, q0, p0, eps):
    # closed-form free evolution of a frozen Gaussian (spreading width)
    return (np.pi * eps) ** -0.25 / np.sqrt(1 + 1j * t) * np.exp(
        -((x - q0 - p0 * t) ** 2) / (2 * eps * (1 + 1j * t))
        + 1j / eps * (p0 * (x - q0) - 0.5 * p0**2 * t)
    )


def test_analytic_harmonic_at_zero_and_period():
    eps = 0.1
    grid = periodic_grid()
    packet = packet_field(GaussianPacket(PhasePoint([1.0], [0.0]), eps), grid)
    zero = analytic_harmonic(1.0, 0.0, eps, 0.0, grid)
    assert np.allclose(zero.values, packet.values, atol=1e-14)
    period = analytic_harmonic(1.0, 0.0, eps, 2 * np.pi, grid)
    assert np.allclose(period.values, -packet.values, atol=1e-12)
    for t in (0.0, 0.7, 3.1, 12.0):
        f = analytic_harmonic(1.0, 0.0, eps, t, grid)
        assert l2_norm(f) == pytest.approx(1.0, abs=1e-8)


def test_split_step_config_validation():
    ham = make_potential("harmonic", 1)
    with pytest.raises(ValueError):
        SplitStepConfig(GridSpec.cube(1, -np.pi, np.pi, 512), 1e-3, ham, 0.1)
    with pytest.raises(ValueError):
        SplitStepConfig(periodic_grid(n=500), 1e-3, ham, 0.1)


def test_split_step_free_flight_matches_closed_form():
    eps = 0.2
    d = 1
    ham = make_potential("harmonic", d)
    free = type(ham)(
        "free", d,
        potential=lambda q: np.zeros(np.asarray(q).shape[:-1]),
        gradient=lambda q: np.zeros_like(np.asarray(q, dtype=float)),
        hessian=lambda q: np.zeros(np.asarray(q).shape[:-1] + (d, d)),
    )
    grid = GridSpec.cube(1, -12, 12, 1024, periodic=True)
    q0, p0 = -1.0, 1.5
    psi0 = packet_field(GaussianPacket(PhasePoint([q0], [p0]), eps), grid)
    out = split_step_evolve(psi0, SplitStepConfig(grid, 0.5, free, eps), 1.0)
    x = grid.axes()[0]
    assert np.max(np.abs(out.values - free_gaussian(1.0, x, q0, p0, eps))) < 1e-10


def test_split_step_matches_analytic_harmonic():
    eps = 0.1
    grid = periodic_grid()
    ham = make_potential("harmonic", 1)
    psi0 = packet_field(GaussianPacket(PhasePoint([1.0], [0.0]), eps), grid)
    out = split_step_evolve(psi0, SplitStepConfig(grid, 1e-3, ham, eps), 1.0)
    assert l2_error(out, analytic_harmonic(1.0, 0.0, eps, 1.0, grid)) < 1e-6


def test_split_step_norm_conservation():
    eps = 0.1
    grid = periodic_grid(n=256)
    ham = make_potential("torsional", 1)
    psi0 = packet_field(GaussianPacket(PhasePoint([1.0], [0.0]), eps), grid)
    out = split_step_evolve(psi0, SplitStepConfig(grid, 1e-3, ham, eps), 10.0)
    assert l2_norm(out) == pytest.approx(1.0, abs=1e-12)


def test_split_step_second_order():
    eps = 0.1
    grid = periodic_grid()
    ham = make_potential("harmonic", 1)
    psi0 = packet_field(GaussianPacket(PhasePoint([1.0], [0.0]), eps), grid)
    target = analytic_harmonic(1.0, 0.0, eps, 1.0, grid)
    errs = []
    for tau in (4e-3, 2e-3, 1e-3):
        out = split_step_evolve(psi0, SplitStepConfig(grid, tau, ham, eps), 1.0)
        errs.append(l2_error(out, target))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.abs(orders - 2.0) < 0.1)


def test_split_step_snapshot_times():
    eps = 0.1
    grid = periodic_grid(n=128)
    ham = make_potential("harmonic", 1)
    psi0 = packet_field(GaussianPacket(PhasePoint([1.0], [0.0]), eps), grid)
    times = [f.time for f in split_step_snapshots(psi0, SplitStepConfig(grid, 0.01, ham, eps), 0.05, 2)]
    assert np.allclose(times, [0.0, 0.02, 0.04, 0.05])


def test_field_energies_of_coherent_state():
    eps = 0.1
    grid = periodic_grid()
    ham = make_potential("harmonic", 1)
    q0, p0 = 0.8, -0.5
    psi0 = packet_field(GaussianPacket(PhasePoint([q0], [p0]), eps), grid)
    ekin, epot = field_energies(psi0, ham)
    assert ekin == pytest.approx(p0**2 / 2 + eps / 4, rel=1e-8)
    assert epot == pytest.approx(q0**2 / 2 + eps / 4, rel=1e-8)


def test_lsc_ivr_initial_kinetic():
    eps = 0.02
    d = 3
    ham = make_potential("harmonic", d)
    z0 = PhasePoint([0.5] * d, [0.0] * d)
    m = 40_000
    times, kin = lsc_ivr_expectation(
        z0, eps, ham, Observable.kinetic(), IntegratorSpec(2, 0.1), m, 0.0, seed=4
    )
    # mean of |p|^2/2 under per-coordinate variance eps/2
    expected = eps * d / 4
    std = np.sqrt(2 * d * (eps / 2) ** 2 / 4 / m)
    assert abs(kin[0] - expected) < 4 * std


def test_lsc_ivr_harmonic_matches_coherent_state_values():
    # quadratic flow is exact: kinetic energy curve p(t)^2/2 + eps/4
    eps = 0.05
    ham = make_potential("harmonic", 1)
    z0 = PhasePoint([1.0], [0.0])
    m = 200_000
    spec = IntegratorSpec(4, 0.05)
    times, kin, pot = lsc_ivr_energies(z0, eps, ham, spec, m, 2.0, 8, seed=9)
    total = kin + pot
    assert np.max(np.abs(total - total[0])) < 3e-4  # conserved to MC noise
    se = np.sqrt(2 * (eps / 2) ** 2 / 4 / m) + abs(z0.q[0]) * np.sqrt(eps / 2 / m)
    for t, k in zip(times, kin):
        pt = -np.sin(t)
        assert abs(k - (pt**2 / 2 + eps / 4)) < 3 * se


def test_lsc_ivr_determinism():
    eps = 0.05
    ham = make_potential("torsional", 2)
    z0 = PhasePoint([1.0, 0.0], [0.0, 0.0])
    spec = IntegratorSpec(2, 0.1)
    a = lsc_ivr_energies(z0, eps, ham, spec, 1000, 1.0, 5, seed=3)
    b = lsc_ivr_energies(z0, eps, ham, spec, 1000, 1.0, 5, seed=3)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
