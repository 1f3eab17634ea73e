import numpy as np
import pytest

from hkprop.model import GaussianPacket, PhasePoint, make_potential
from hkprop.reference import SplitStepConfig, split_step_snapshots
from hkprop.synthesis import GridSpec, packet_field

TORSION_Z0 = PhasePoint([1.0, 0.0], [0.0, 0.0])


def _torsional_reference(eps, t_final, dt_snapshot, n=256, ref_tau=1e-3):
    grid = GridSpec.cube(2, -np.pi, np.pi, n, periodic=True)
    ham = make_potential("torsional", 2)
    psi0 = packet_field(GaussianPacket(TORSION_Z0, eps), grid)
    cfg = SplitStepConfig(grid, ref_tau, ham, eps)
    stride = int(round(dt_snapshot / ref_tau))
    fields = {}
    for f in split_step_snapshots(psi0, cfg, t_final, stride):
        fields[round(f.time, 9)] = f
    return grid, fields


@pytest.fixture(scope="session")
def torsional_reference_t5():
    """Split-step fields every 0.25 up to T=5 (eps=0.1, n=256)."""
    return _torsional_reference(0.1, 5.0, 0.25)


@pytest.fixture(scope="session")
def torsional_reference_t20():
    """Split-step fields at t=0 and T=20 only (eps=0.1, n=256)."""
    return _torsional_reference(0.1, 20.0, 20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
