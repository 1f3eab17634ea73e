import numpy as np
import pytest

from oracles import overlap_quadrature_1d, overlap_quadrature_2d, random_pair

from hkprop.model import PhasePoint, make_potential
from hkprop.observables import (
    Observable,
    expectation,
    overlap_harmonic,
    overlap_henon_heiles,
    overlap_identity,
    overlap_kinetic,
    overlap_polynomial,
    overlap_torsional,
    potential_observable,
)
from hkprop.propagation import IntegratorSpec, propagate_plan
from hkprop.sampling import decompose_gaussian_initial, sample_pairs

SIGMA = 1.0 / np.sqrt(80.0)

CLOSED_FORMS = {
    "identity": overlap_identity,
    "harmonic": overlap_harmonic,
    "kinetic": overlap_kinetic,
    "torsional": overlap_torsional,
}


def test_identity_special_values():
    z = (np.array([0.4]), np.array([-0.7]))
    assert overlap_identity(z, z, 0.3) == pytest.approx(1.0)
    a = (np.array([0.0]), np.array([0.0]))
    b = (np.array([2.0]), np.array([0.0]))
    assert overlap_identity(a, b, 1.0) == pytest.approx(np.exp(-1.0))


def test_identity_accepts_phase_points():
    z1 = PhasePoint([0.2, 0.1], [0.4, -0.3])
    z2 = PhasePoint([0.3, 0.0], [0.1, 0.2])
    v = overlap_identity(z1, z2, 0.2)
    w = overlap_identity((z1.q, z1.p), (z2.q, z2.p), 0.2)
    assert v == pytest.approx(w)


def test_identity_modulus(rng):
    for _ in range(20):
        eps = float(rng.uniform(0.05, 1.0))
        z1, z2 = random_pair(rng, eps)
        dz2 = (z1[0] - z2[0]) ** 2 + (z1[1] - z2[1]) ** 2
        assert abs(overlap_identity(z1, z2, eps)) == pytest.approx(
            float(np.exp(-dz2 / (4 * eps))), rel=1e-12
        )


@pytest.mark.parametrize("name", sorted(CLOSED_FORMS))
def test_closed_forms_match_quadrature(name, rng):
    fn = CLOSED_FORMS[name]
    for _ in range(12):
        eps = float(rng.uniform(0.05, 1.0))
        z1, z2 = random_pair(rng, eps)
        closed = fn(z1, z2, eps)
        oracle = overlap_quadrature_1d(
            (z1[0][0], z1[1][0]), (z2[0][0], z2[1][0]), eps, name
        )
        assert abs(closed - oracle) / abs(oracle) < 1e-10


def test_coincident_values():
    eps = 0.3
    q, p = np.array([0.7]), np.array([-1.2])
    z = (q, p)
    assert overlap_harmonic(z, z, eps) == pytest.approx(q[0] ** 2 / 2 + eps / 4)
    assert overlap_kinetic(z, z, eps) == pytest.approx(p[0] ** 2 / 2 + eps / 4)
    zero = (np.zeros(1), np.zeros(1))
    assert overlap_harmonic(zero, zero, eps) == pytest.approx(eps / 4)
    assert overlap_kinetic(zero, zero, eps) == pytest.approx(eps / 4)
    assert overlap_torsional(z, z, eps) == pytest.approx(
        1 - np.exp(-eps / 4) * np.cos(q[0])
    )
    zero2 = (np.zeros(2), np.zeros(2))
    assert overlap_torsional(zero2, zero2, eps) == pytest.approx(2 * (1 - np.exp(-eps / 4)))


def test_kinetic_equals_harmonic_under_fourier_rotation(rng):
    for _ in range(10):
        eps = float(rng.uniform(0.05, 0.5))
        z1, z2 = random_pair(rng, eps, dim=2)
        rot1 = (z1[1], -z1[0])
        rot2 = (z2[1], -z2[0])
        lhs = overlap_kinetic(z1, z2, eps) / overlap_identity(z1, z2, eps)
        rhs = overlap_harmonic(rot1, rot2, eps) / overlap_identity(rot1, rot2, eps)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_polynomial_monomials(rng):
    eps = 0.2
    z1, z2 = random_pair(rng, eps)
    assert overlap_polynomial(z1, z2, eps, (0,)) == pytest.approx(
        overlap_identity(z1, z2, eps)
    )
    assert overlap_polynomial(z1, z2, eps, (2,)) == pytest.approx(
        2.0 * overlap_harmonic(z1, z2, eps), rel=1e-12
    )
    for a in (1, 3, 4):
        oracle = overlap_quadrature_1d((z1[0][0], z1[1][0]), (z2[0][0], z2[1][0]), eps, a)
        assert abs(overlap_polynomial(z1, z2, eps, (a,)) - oracle) / abs(oracle) < 1e-10
    with pytest.raises(ValueError):
        overlap_polynomial(z1, z2, eps, (5,))
    with pytest.raises(ValueError):
        overlap_polynomial((np.zeros(2), np.zeros(2)), (np.zeros(2), np.zeros(2)), eps, (3, 2))


def test_henon_heiles_element_matches_2d_quadrature(rng):
    def potential(x, y):
        return (
            0.5 * (x**2 + y**2)
            + SIGMA * (x * y**2 - x**3 / 3)
            + SIGMA**2 / 16 * (x**2 + y**2) ** 2
        )

    for _ in range(4):
        eps = float(rng.uniform(0.05, 0.4))
        z1, z2 = random_pair(rng, eps, dim=2)
        closed = overlap_henon_heiles(z1, z2, eps, SIGMA)
        oracle = overlap_quadrature_2d(z1, z2, eps, potential)
        assert abs(closed - oracle) / abs(oracle) < 1e-9


def test_hermiticity(rng):
    obs = [
        Observable.identity(),
        Observable.position_sq_half(),
        Observable.kinetic(),
        Observable.torsional(),
        Observable.henon_heiles(SIGMA),
    ]
    for _ in range(10):
        eps = float(rng.uniform(0.05, 0.5))
        z1, z2 = random_pair(rng, eps, dim=2)
        for o in obs:
            a = o.matrix_element(z1, z2, eps)
            b = o.matrix_element(z2, z1, eps)
            assert a == pytest.approx(np.conj(b), rel=1e-12, abs=1e-12)


def test_expectation_single_pair_identity():
    eps = 0.1
    z0 = PhasePoint([0.3], [0.8])
    dec = decompose_gaussian_initial(z0, eps)
    plan = sample_pairs(dec, 1, "mc", seed=0)
    # place both members exactly at the centre: r0 = 2^d there
    plan.points[0] = np.tile(z0.as_vector(), 2)
    plan.r0_values[0] = (2.0, 2.0)
    ham = make_potential("harmonic", 1)
    pair = next(propagate_plan(plan, IntegratorSpec(2, 0.1), ham, 0.0))
    res = expectation(pair, Observable.identity())
    assert res.value == pytest.approx(4.0)
    assert res.imag_residue < 1e-14


def test_expectation_norm_estimate_d2():
    # paired QMC estimate of <psi0, psi0> for a 2-d Gaussian
    eps = 0.01
    z0 = PhasePoint([1.0, 0.0], [0.0, 0.0])
    dec = decompose_gaussian_initial(z0, eps)
    plan = sample_pairs(dec, 2**16, "qmc")
    ham = make_potential("torsional", 2)
    pair = next(propagate_plan(plan, IntegratorSpec(2, 0.1), ham, 0.0))
    res = expectation(pair, Observable.identity())
    assert res.value == pytest.approx(1.0, abs=0.02)


def test_imag_residue_shrinks_with_m():
    eps = 0.05
    z0 = PhasePoint([0.5, -0.2], [0.1, 0.0])
    dec = decompose_gaussian_initial(z0, eps)
    ham = make_potential("torsional", 2)
    residues = {}
    for m in (2**10, 2**14):
        plan = sample_pairs(dec, m, "qmc")
        pair = next(propagate_plan(plan, IntegratorSpec(2, 0.1), ham, 0.0))
        res = expectation(pair, Observable.kinetic())
        residues[m] = (res.imag_residue, abs(res.value))
    final_res, final_val = residues[2**14]
    assert final_res < final_val / 10.0
    assert final_res < residues[2**10][0]


def test_energy_split_consistency(rng):
    # kinetic + potential elements summed term-wise equal the assembled total
    eps = 0.1
    ham = make_potential("henon_heiles", 3, sigma=SIGMA)
    kin = Observable.kinetic()
    pot = potential_observable(ham)
    z1, z2 = random_pair(rng, eps, dim=3)
    total = kin.matrix_element(z1, z2, eps) + pot.matrix_element(z1, z2, eps)
    again = kin.matrix_element(z1, z2, eps) + pot.matrix_element(z1, z2, eps)
    assert total == again  # same terms, same order, bitwise equal


def test_expectation_requires_pairs():
    from hkprop.sampling import sample_mc

    eps = 0.1
    dec = decompose_gaussian_initial(PhasePoint([1.0], [0.0]), eps)
    plan = sample_mc(dec, 16, seed=0)
    ham = make_potential("harmonic", 1)
    ens = next(propagate_plan(plan, IntegratorSpec(2, 0.1), ham, 0.0))
    with pytest.raises(TypeError):
        expectation(ens, Observable.identity())


def test_classical_symbols():
    q = np.array([[1.0, 2.0]])
    p = np.array([[0.5, -0.5]])
    assert Observable.kinetic().classical_symbol(q, p)[0] == pytest.approx(0.25)
    assert Observable.position_sq_half().classical_symbol(q, p)[0] == pytest.approx(2.5)
    hh = Observable.henon_heiles(SIGMA)
    ham = make_potential("henon_heiles", 2, sigma=SIGMA)
    assert hh.classical_symbol(q, p)[0] == pytest.approx(float(ham.potential(q[0])))
