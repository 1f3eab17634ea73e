import numpy as np
import pytest

from hkprop.model import GaussianPacket, PhasePoint, eval_packet, make_potential
from hkprop.propagation import HKEnsemble, IntegratorSpec, propagate_plan
from hkprop.sampling import decompose_gaussian_initial, sample_mc
from hkprop.synthesis import (
    GridMismatchError,
    GridSpec,
    WaveField,
    l2_error,
    l2_norm,
    packet_field,
    synthesize,
    synthesize_momentum,
)


def random_ensemble(rng, m, d=1, eps=0.1, time=0.0):
    return HKEnsemble(
        time=time, epsilon=eps,
        q=rng.uniform(-1, 1, (m, d)), p=rng.uniform(-1, 1, (m, d)),
        action=rng.uniform(-0.5, 0.5, m),
        u=np.exp(1j * rng.uniform(0, 2 * np.pi, m)),
        r0=2.0**d * np.exp(1j * rng.uniform(0, 2 * np.pi, m)),
        theta=np.zeros(m),
    )


def test_grid_spec_basics():
    g = GridSpec.cube(2, -1.0, 1.0, 8)
    assert g.dimension == 2
    assert g.shape == (8, 8)
    assert g.volume_element == pytest.approx(0.0625)
    axes = g.axes()
    assert axes[0][0] == -1.0 and axes[0][-1] == pytest.approx(0.75)
    with pytest.raises(ValueError):
        GridSpec([0.0], [0.0], [4])
    with pytest.raises(ValueError):
        GridSpec([0.0], [1.0], [1])


def test_single_record_is_packet():
    eps = 0.2
    packet = GaussianPacket(PhasePoint([0.3], [1.1]), eps)
    grid = GridSpec.cube(1, -3, 3, 128)
    field = packet_field(packet, grid)
    x = grid.axes()[0][:, None]
    assert np.allclose(field.values, eval_packet(packet, x), atol=1e-14)
    # 2-d factorisation
    packet2 = GaussianPacket(PhasePoint([0.3, -0.4], [1.1, 0.2]), eps)
    grid2 = GridSpec.cube(2, -3, 3, 32)
    field2 = packet_field(packet2, grid2)
    ax = grid2.axes()
    pts = np.stack(np.meshgrid(ax[0], ax[1], indexing="ij"), axis=-1)
    assert np.allclose(field2.values, eval_packet(packet2, pts), atol=1e-14)


def test_synthesis_is_deterministic(rng):
    ens = random_ensemble(rng, 200)
    grid = GridSpec.cube(1, -4, 4, 256)
    a = synthesize(ens, grid)
    b = synthesize(ens, grid)
    assert np.array_equal(a.values, b.values)


def test_synthesis_linearity(rng):
    eps = 0.1
    e1 = random_ensemble(rng, 100, eps=eps)
    e2 = random_ensemble(rng, 50, eps=eps)
    combined = HKEnsemble(
        time=0.0, epsilon=eps,
        q=np.vstack([e1.q, e2.q]), p=np.vstack([e1.p, e2.p]),
        action=np.concatenate([e1.action, e2.action]),
        u=np.concatenate([e1.u, e2.u]),
        r0=np.concatenate([e1.r0, e2.r0]),
        theta=np.concatenate([e1.theta, e2.theta]),
    )
    grid = GridSpec.cube(1, -4, 4, 128)
    f1 = synthesize(e1, grid).values
    f2 = synthesize(e2, grid).values
    fc = synthesize(combined, grid).values
    expected = (100 * f1 + 50 * f2) / 150
    assert np.max(np.abs(fc - expected)) < 1e-12 * np.max(np.abs(expected))


def test_momentum_of_centered_packet_is_self_dual():
    eps = 0.25
    packet = GaussianPacket(PhasePoint([0.0], [0.0]), eps)
    grid = GridSpec.cube(1, -3, 3, 64)
    pos = packet_field(packet, grid, "position")
    mom = packet_field(packet, grid, "momentum")
    assert np.allclose(pos.values, mom.values, atol=1e-14)


def test_momentum_matches_direct_fourier_quadrature(rng):
    eps = 0.2
    ens = random_ensemble(rng, 16, eps=eps)
    fine = GridSpec.cube(1, -10, 10, 8192)
    pos = synthesize(ens, fine)
    mom_grid = GridSpec.cube(1, -4, 4, 32)
    mom = synthesize_momentum(ens, mom_grid)
    x = fine.axes()[0]
    dx = fine.spacing[0]
    for j, xi in enumerate(mom_grid.axes()[0]):
        ft = (2 * np.pi * eps) ** -0.5 * np.sum(np.exp(-1j * x * xi / eps) * pos.values) * dx
        assert abs(ft - mom.values[j]) < 1e-6


def test_parseval_between_representations(rng):
    eps = 0.15
    ens = random_ensemble(rng, 32, eps=eps)
    pos = synthesize(ens, GridSpec.cube(1, -8, 8, 2048))
    mom = synthesize_momentum(ens, GridSpec.cube(1, -8, 8, 2048))
    assert l2_norm(pos) == pytest.approx(l2_norm(mom), abs=1e-8)


def test_cutoff_drops_far_tails_only(rng):
    eps = 0.05
    ens = random_ensemble(rng, 64, eps=eps)
    grid = GridSpec.cube(1, -6, 6, 512)
    full = synthesize(ens, grid)
    cut = synthesize(ens, grid, cutoff=12.0 * np.sqrt(eps))
    assert l2_error(full, cut) < 1e-12
    tight = synthesize(ens, grid, cutoff=2.0 * np.sqrt(eps))
    assert l2_error(full, tight) > 1e-6  # the knob actually truncates


def test_l2_error_checks_grids(rng):
    ens = random_ensemble(rng, 8)
    f = synthesize(ens, GridSpec.cube(1, -4, 4, 64))
    g = synthesize(ens, GridSpec.cube(1, -4, 4, 128))
    with pytest.raises(GridMismatchError):
        l2_error(f, g)
    m = synthesize_momentum(ens, GridSpec.cube(1, -4, 4, 64))
    with pytest.raises(GridMismatchError):
        l2_error(f, m)
    assert l2_error(f, f) == 0.0


def test_triangle_inequality(rng):
    grid = GridSpec.cube(1, -4, 4, 64)
    a = synthesize(random_ensemble(rng, 8), grid)
    b = synthesize(random_ensemble(rng, 8), grid)
    c = synthesize(random_ensemble(rng, 8), grid)
    assert l2_error(a, c) <= l2_error(a, b) + l2_error(b, c) + 1e-12


def test_norm_stability_band():
    eps = 0.1
    m = 4096
    z0 = PhasePoint([1.0], [0.0])
    dec = decompose_gaussian_initial(z0, eps)
    ham = make_potential("harmonic", 1)
    grid = GridSpec.cube(1, -3, 5, 512)
    sigma = np.sqrt((4.0 - 1.0) / m)
    for seed in range(3):
        plan = sample_mc(dec, m, seed=seed)
        ens = next(propagate_plan(plan, IntegratorSpec(2, 0.1), ham, 0.0))
        norm = l2_norm(synthesize(ens, grid))
        assert 1.0 - 3 * sigma < norm < 1.0 + 3 * sigma


def test_initial_sampling_error_level():
    # t=0 error sits at sqrt((4^d - 1)/M) (twice the weight-normalised
    # variance line, since |r0| = 2^d)
    eps = 0.1
    m = 2**15
    z0 = PhasePoint([1.0], [0.0])
    dec = decompose_gaussian_initial(z0, eps)
    ham = make_potential("harmonic", 1)
    grid = GridSpec.cube(1, -np.pi, np.pi, 512)
    target = packet_field(GaussianPacket(z0, eps), grid)
    plan = sample_mc(dec, m, seed=11)
    ens = next(propagate_plan(plan, IntegratorSpec(2, 0.1), ham, 0.0))
    err = l2_error(synthesize(ens, grid), target)
    level = np.sqrt(3.0 / m)
    assert 0.7 * level < err < 1.4 * level


def test_wavefield_validation():
    grid = GridSpec.cube(1, -1, 1, 8)
    with pytest.raises(ValueError):
        WaveField(grid, np.zeros(4), "position", 0.1, 0.0)
    with pytest.raises(ValueError):
        WaveField(grid, np.zeros(8), "spectral", 0.1, 0.0)
