"""Quaternion algebra kernel.

Conventions:

- Scalar-first components ``q = [w, x, y, z]`` stored as float ndarrays of
  shape (4,); the scalar part is ``q[0]`` and the vector part ``q[1:]``.
- A "pure vector" quaternion has scalar part exactly 0.
- All functions are pure and never mutate their arguments.

The product follows Hamilton's rules (e1*e2 = e3), written in the vector
form ``ab = (a0 b0 - av.bv, a0 bv + b0 av + av x bv)``.
"""

from __future__ import annotations

import numpy as np

#: Multiplicative identity (1, 0, 0, 0).
IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

#: Construction-time tolerance: unit quaternions/axes may deviate from unit
#: norm by at most this much and are renormalized; larger deviations are
#: rejected as logic errors rather than round-off.
UNIT_TOL = 1e-9


def pure(vec: np.ndarray) -> np.ndarray:
    """Embed a 3-vector as the pure quaternion (0, vec)."""
    v = np.asarray(vec, dtype=float)
    return np.array([0.0, v[0], v[1], v[2]])


def scalar_part(q: np.ndarray) -> float:
    return float(q[0])


def vector_part(q: np.ndarray) -> np.ndarray:
    return np.asarray(q, dtype=float)[1:].copy()


def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Quaternion product ab; satisfies |ab| = |a| |b|."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    av, bv = a[1:], b[1:]
    out = np.empty(4)
    out[0] = a[0] * b[0] - av @ bv
    out[1:] = a[0] * bv + b[0] * av + np.cross(av, bv)
    return out


def qconj(a: np.ndarray) -> np.ndarray:
    """Conjugate (w, vec) -> (w, -vec)."""
    a = np.asarray(a, dtype=float)
    return np.array([a[0], -a[1], -a[2], -a[3]])


def qnorm(a: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float)))


def qinv(a: np.ndarray) -> np.ndarray:
    """Multiplicative inverse conj(a)/|a|^2; raises on the zero quaternion."""
    a = np.asarray(a, dtype=float)
    n2 = a @ a
    if n2 == 0.0:
        raise ZeroDivisionError("zero quaternion has no inverse")
    return qconj(a) / n2


def qcross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Quaternion cross (outer) product (b conj(a) - a conj(b)) / 2.

    The result is always a pure vector: (0, a0 bv - b0 av + av x bv).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    av, bv = a[1:], b[1:]
    out = np.zeros(4)
    out[1:] = a[0] * bv - b[0] * av + np.cross(av, bv)
    return out


def unit_quaternion(q: np.ndarray, tol: float = UNIT_TOL) -> np.ndarray:
    """Validating constructor for unit quaternions.

    Inputs whose norm deviates from 1 by at most ``tol`` are renormalized
    (absorbing accumulated round-off); larger deviations raise ValueError so
    that logic errors are not silently masked.
    """
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if abs(n - 1.0) > tol:
        raise ValueError(f"not a unit quaternion: |q| = {n!r}")
    return q / n


def rotate(q: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Rotate 3-vector x by unit quaternion q: vector part of q (0,x) conj(q)."""
    q = unit_quaternion(q)
    return qmul(qmul(q, pure(x)), qconj(q))[1:]


def rotation_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix R(q) with R(q) x = rotate(q, x); R(q) = R(-q)."""
    q0, q1, q2, q3 = unit_quaternion(q)
    return np.array([
        [q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3, 2 * (q1 * q2 - q0 * q3), 2 * (q0 * q2 + q1 * q3)],
        [2 * (q1 * q2 + q0 * q3), q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3, -2 * (q0 * q1 - q2 * q3)],
        [-2 * (q0 * q2 - q1 * q3), 2 * (q0 * q1 + q2 * q3), q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3],
    ])


def axis_angle(n: np.ndarray, theta: float) -> np.ndarray:
    """Unit quaternion (cos(theta/2), sin(theta/2) n) for rotation about axis n.

    Angles outside [0, pi] are reduced to the canonical representative via
    the equivalence (n, theta) ~ (-n, 2 pi - theta).
    """
    n = np.asarray(n, dtype=float)
    nn = np.linalg.norm(n)
    if abs(nn - 1.0) > UNIT_TOL:
        raise ValueError(f"rotation axis must be a unit vector, got |n| = {nn!r}")
    n = n / nn
    theta = float(theta) % (2.0 * np.pi)
    if theta > np.pi:
        n = -n
        theta = 2.0 * np.pi - theta
    half = 0.5 * theta
    out = np.empty(4)
    out[0] = np.cos(half)
    out[1:] = np.sin(half) * n
    return out
