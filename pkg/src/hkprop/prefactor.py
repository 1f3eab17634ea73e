"""Continuous-branch evaluation of the semiclassical prefactor.

The prefactor of a trajectory is ``u(t) = sqrt(2^-d det Z_t)`` where

    ``Z_t = dX/dq - i dX/dp + i dXi/dq + dXi/dp``

is assembled from the blocks of the flow Jacobian.  The complex square
root is taken along a continuous branch: the argument of ``det Z_t`` is
accumulated step by step (``theta(0) = 0``) instead of using the
principal branch, so ``u`` never jumps sign when the determinant crosses
the negative real axis.  Per-step argument increments are required to
stay below ``pi - margin``; larger jumps mean the step size cannot
certify continuity and raise an error rather than silently guessing the
winding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CausticError",
    "BranchContinuityError",
    "PrefactorState",
    "hk_matrix",
    "complex_det",
    "advance_argument",
    "update_theta",
    "hk_prefactor",
    "prefactor_values",
]

#: per-step argument jumps above pi minus this margin are rejected
JUMP_MARGIN = 0.1


class CausticError(RuntimeError):
    """The prefactor determinant vanished (or became non-finite)."""


class BranchContinuityError(RuntimeError):
    """A per-step argument jump was too large to certify continuity."""


def hk_matrix(w) -> np.ndarray:
    """Assemble ``Z = dX/dq - i dX/dp + i dXi/dq + dXi/dp`` from Jacobian blocks.

    Parameters
    ----------
    w : array, shape (..., 2d, 2d)
        Flow Jacobian with block layout [[dX/dq, dX/dp], [dXi/dq, dXi/dp]].

    Returns
    -------
    complex array, shape (..., d, d)
    """
    w = np.asarray(w)
    if w.shape[-1] != w.shape[-2] or w.shape[-1] % 2 != 0:
        raise ValueError(f"w must have shape (..., 2d, 2d), got {w.shape}")
    d = w.shape[-1] // 2
    return (w[..., :d, :d] + w[..., d:, d:]) + 1j * (w[..., d:, :d] - w[..., :d, d:])


def complex_det(a) -> np.ndarray:
    """Determinant of batched complex matrices via pivoted Gaussian elimination.

    Vectorised over the batch, which is much faster than per-matrix LAPACK
    calls for the small (d <= 6) matrices used here.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    batch = a.shape[:-2]
    d = a.shape[-1]
    if d == 1:
        return a[..., 0, 0].copy()
    if d == 2:
        return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    m = a.reshape((-1, d, d)).copy()
    n = m.shape[0]
    det = np.ones(n, dtype=complex)
    rows = np.arange(n)
    for k in range(d):
        piv = k + np.abs(m[:, k:, k]).argmax(axis=1)
        swap = piv != k
        if swap.any():
            tmp = m[rows, piv].copy()
            m[rows, piv] = m[rows, k]
            m[rows, k] = tmp
            det[swap] = -det[swap]
        pivots = m[:, k, k]
        det *= pivots
        if k < d - 1:
            with np.errstate(divide="ignore", invalid="ignore"):
                factors = m[:, k + 1 :, k] / pivots[:, None]
            m[:, k + 1 :, k:] -= factors[:, :, None] * m[:, None, k, k:]
    if batch == ():
        return det[0]
    return det.reshape(batch)


def advance_argument(theta, det_old, det_new, margin: float = JUMP_MARGIN):
    """Continue the argument of a determinant path by one step.

    Adds the principal difference ``arg(det_new / det_old)`` to ``theta``;
    all inputs may be arrays of a common shape.

    Raises
    ------
    CausticError
        if ``det_new`` vanishes or is non-finite anywhere.
    BranchContinuityError
        if any argument increment reaches ``pi - margin``.
    """
    det_new = np.asarray(det_new)
    bad = ~np.isfinite(det_new) | (det_new == 0)
    if np.any(bad):
        raise CausticError(
            f"prefactor determinant vanished or overflowed for {int(np.sum(bad))} "
            "trajectory(ies); reduce the time step or inspect the dynamics"
        )
    delta = np.angle(det_new / det_old)
    jump = np.abs(delta)
    if np.any(jump >= np.pi - margin):
        raise BranchContinuityError(
            f"argument of det Z jumped by {float(np.max(jump)):.3f} rad in one step "
            f"(limit {np.pi - margin:.3f}); the step size is too large to certify "
            "a continuous branch"
        )
    return theta + delta


@dataclass(frozen=True)
class PrefactorState:
    """Determinant value, continuous argument and modulus along one trajectory."""

    det_value: complex
    theta: float
    magnitude: float

    @classmethod
    def initial(cls, dimension: int) -> "PrefactorState":
        # W(0) = identity gives Z = 2 I and det Z = 2^d
        return cls(det_value=complex(2.0**dimension), theta=0.0, magnitude=2.0**dimension)


def update_theta(prev: PrefactorState, det_new: complex, margin: float = JUMP_MARGIN) -> PrefactorState:
    """Advance a scalar prefactor state to the next determinant value."""
    det_new = complex(det_new)
    theta = float(advance_argument(prev.theta, prev.det_value, det_new, margin))
    return PrefactorState(det_value=det_new, theta=theta, magnitude=abs(det_new))


def prefactor_values(theta, magnitude, dimension: int) -> np.ndarray:
    """Continuous-branch ``u = sqrt(2^-d |det|) * exp(i theta / 2)`` (vectorised)."""
    magnitude = np.asarray(magnitude, dtype=float)
    if np.any(magnitude <= 0):
        raise CausticError("prefactor determinant has vanished (zero magnitude)")
    return np.sqrt(2.0 ** (-dimension) * magnitude) * np.exp(0.5j * np.asarray(theta))


def hk_prefactor(state: PrefactorState, dimension: int) -> complex:
    """Prefactor value for a scalar state; ``u(0) = 1``."""
    return complex(prefactor_values(state.theta, state.magnitude, dimension))
