"""Shared test fixtures and independent oracle helpers.

The oracles here deliberately avoid the library's code paths: quaternion
products are expanded with the explicit 16-term component formula, conic
states are built from orbital elements, and gradients are checked by central
finite differences.
"""

from __future__ import annotations

import numpy as np
import pytest

from kskep.canon import CartesianState, phase_from_cartesian
from kskep.ksmap import KSChart


def oracle_qmul(a, b):
    """Quaternion product by the explicit component formula (independent route)."""
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def oracle_qconj(a):
    return np.array([a[0], -a[1], -a[2], -a[3]])


def oracle_qcross(a, b):
    """Cross product straight from its definition (b conj(a) - a conj(b))/2."""
    return (oracle_qmul(b, oracle_qconj(a)) - oracle_qmul(a, oracle_qconj(b))) / 2.0


def rand_unit_vector(rng) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def rand_unit_quaternion(rng) -> np.ndarray:
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def rand_chart(rng, alpha=None) -> KSChart:
    return KSChart(rand_unit_vector(rng), alpha if alpha is not None else rng.uniform(0.5, 2.5))


def conic_state(a, e, nu, mu=1.0, orient=None) -> tuple[CartesianState, np.ndarray, np.ndarray]:
    """Exact conic state from elements, with its known Laplace and G vectors.

    Returns (state, e_vec, G_vec).  ``orient`` is an optional rotation matrix
    taking the perifocal frame to the final frame.
    """
    p = a * (1.0 - e * e)
    r = p / (1.0 + e * np.cos(nu))
    x_pf = r * np.array([np.cos(nu), np.sin(nu), 0.0])
    v_pf = np.sqrt(mu / p) * np.array([-np.sin(nu), e + np.cos(nu), 0.0])
    e_pf = np.array([e, 0.0, 0.0])
    g_pf = np.array([0.0, 0.0, np.sqrt(mu * p)])
    if orient is not None:
        x_pf, v_pf, e_pf, g_pf = orient @ x_pf, orient @ v_pf, orient @ e_pf, orient @ g_pf
    return CartesianState(x_pf, v_pf, mu), e_pf, g_pf


def rand_rotation(rng) -> np.ndarray:
    from kskep.quat import rotation_matrix

    return rotation_matrix(rand_unit_quaternion(rng))


def rand_bound_state(rng, mu=None) -> CartesianState:
    mu = mu if mu is not None else rng.uniform(0.5, 2.0)
    a = rng.uniform(0.5, 2.0)
    e = rng.uniform(0.0, 0.9)
    nu = rng.uniform(0.0, 2.0 * np.pi)
    state, _, _ = conic_state(a, e, nu, mu, orient=rand_rotation(rng))
    return state


def rand_constrained_phase(rng, chart, mu=None):
    """Random bound-orbit KS phase satisfying the constraint by construction."""
    state = rand_bound_state(rng, mu)
    return phase_from_cartesian(state, chart, rep="sks", sign=rng.choice([-1.0, 1.0])), state


def rand_free_phase(rng, chart):
    """Random phase with arbitrary (generally constraint-violating) momenta."""
    from kskep.canon import KSPhase

    return KSPhase(rng.normal(size=4), rng.normal(size=4), 0.0, abs(rng.normal()) + 0.1)


def fd_gradient(f, x, eps=1e-6):
    """Central finite-difference gradient of scalar f at x (1-D array)."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        dx = np.zeros_like(x)
        dx[i] = eps
        g[i] = (f(x + dx) - f(x - dx)) / (2.0 * eps)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture
def ks3():
    return KSChart.named("KS3", 1.0)


@pytest.fixture
def ks1():
    return KSChart.named("KS1", 1.0)
