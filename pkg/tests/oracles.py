"""Brute-force quadrature oracles used to pin the analytic matrix elements.

The oracles evaluate ``<g1, O g2>`` by trapezoid sums on wide boxes,
refining until two successive grids agree; for smooth, rapidly decaying
integrands the trapezoid rule converges exponentially, so the refinement
terminates quickly at ~1e-12 accuracy.  They share no code with the
closed forms under test (the kinetic operator is applied as an analytic
second derivative of the ket packet).
"""

import numpy as np


def _packet(x, q, p, eps):
    return (np.pi * eps) ** -0.25 * np.exp(
        -((x - q) ** 2) / (2 * eps) + 1j / eps * p * (x - q)
    )


def _integrand_1d(x, z1, z2, eps, operator):
    (q1, p1), (q2, p2) = z1, z2
    g1 = _packet(x, q1, p1, eps)
    g2 = _packet(x, q2, p2, eps)
    if operator == "identity":
        op = 1.0
    elif operator == "harmonic":
        op = 0.5 * x**2
    elif operator == "torsional":
        op = 1.0 - np.cos(x)
    elif operator == "kinetic":
        # -(eps^2/2) g'' with g'' = (e'' + e'^2) g for exponent e(x)
        eprime = -(x - q2) / eps + 1j * p2 / eps
        op = -(eps**2) / 2 * (-1.0 / eps + eprime**2)
    elif isinstance(operator, int):
        op = x**operator
    else:
        raise ValueError(operator)
    return np.conj(g1) * op * g2


def overlap_quadrature_1d(z1, z2, eps, operator="identity", tol=1e-12):
    """Trapezoid value of <g1, O g2> for scalar phase-space points (q, p)."""
    q1, q2 = z1[0], z2[0]
    center = 0.5 * (q1 + q2)
    half = 15.0 * np.sqrt(eps) + abs(q1 - q2)
    n = 4001
    prev = None
    for _ in range(8):
        x = np.linspace(center - half, center + half, n)
        val = np.trapezoid(_integrand_1d(x, z1, z2, eps, operator), x)
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
        n = 2 * n - 1
    raise RuntimeError("oracle quadrature did not converge")


def overlap_quadrature_2d(z1, z2, eps, potential, n=1601, width=12.0):
    """Tensor trapezoid of <g1, V(x, y) g2> for 2-d points ``(q, p)`` arrays."""
    q1, p1 = z1
    q2, p2 = z2
    axes = []
    for k in range(2):
        c = 0.5 * (q1[k] + q2[k])
        half = width * np.sqrt(eps) + abs(q1[k] - q2[k])
        axes.append(np.linspace(c - half, c + half, n))
    X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
    g1 = _packet(X, q1[0], p1[0], eps) * _packet(Y, q1[1], p1[1], eps)
    g2 = _packet(X, q2[0], p2[0], eps) * _packet(Y, q2[1], p2[1], eps)
    vals = np.conj(g1) * potential(X, Y) * g2
    return np.trapezoid(np.trapezoid(vals, axes[1], axis=1), axes[0])


def random_pair(rng, eps, dim=1):
    """A pair of nearby phase-space points (separation up to ~4 sqrt(eps))."""
    q1 = rng.uniform(-2.0, 2.0, dim)
    p1 = rng.uniform(-2.0, 2.0, dim)
    scale = 4.0 * np.sqrt(eps) / np.sqrt(2.0 * dim)
    q2 = q1 + rng.uniform(-scale, scale, dim)
    p2 = p1 + rng.uniform(-scale, scale, dim)
    return (q1, p1), (q2, p2)
