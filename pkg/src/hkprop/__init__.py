"""Semiclassical wave-packet propagation by superposed frozen Gaussians.

The package implements the full pipeline: FBI-based phase-space sampling
(Monte Carlo and Halton quasi-Monte Carlo), simultaneous symplectic
propagation of trajectories, Jacobians and actions with composition
integrators of order 2/4/6/8, a branch-continuous semiclassical
prefactor, wave-function synthesis on grids, analytic Gaussian matrix
elements for expectation values, and independent reference solvers
(closed-form harmonic, split-step Fourier, quasiclassical phase-space
averaging).
"""

__version__ = "0.1.0"

from .model import (
    GaussianPacket,
    PhasePoint,
    SeparableHamiltonian,
    eval_packet,
    harmonic_potential,
    henon_heiles_potential,
    make_potential,
    packet_fourier_image,
    torsional_potential,
)
from .prefactor import (
    BranchContinuityError,
    CausticError,
    PrefactorState,
    hk_matrix,
    hk_prefactor,
    update_theta,
)
from .propagation import (
    EscapedTrajectoryError,
    HKEnsemble,
    IntegratorSpec,
    PairedEnsemble,
    TrajectoryState,
    composition_step,
    propagate_plan,
    verlet_step,
)
from .sampling import (
    FbiDecomposition,
    SamplePlan,
    decompose_gaussian_initial,
    halton,
    initial_variance_gaussian,
    koksma_hlawka_residual_1d,
    sample_mc,
    sample_pairs,
    sample_qmc,
)
from .synthesis import (
    GridSpec,
    WaveField,
    l2_error,
    l2_norm,
    packet_field,
    synthesize,
    synthesize_momentum,
)
from .observables import (
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
from .reference import (
    SplitStepConfig,
    analytic_harmonic,
    lsc_ivr_energies,
    lsc_ivr_expectation,
    split_step_evolve,
    split_step_snapshots,
)
