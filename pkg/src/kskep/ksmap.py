"""Generalized KS point transformation with an arbitrary defining vector.

The chart is fixed by a unit 3-vector c (the defining vector) and a positive
length scale alpha.  The forward map sends a KS quaternion v to the Cartesian
position ``x = (v (0,c) conj(v)) / alpha``; the classical celestial-mechanics
set corresponds to c = e1 ("KS1") and the atomic-physics set to c = e3
("KS3").  Each position is covered by a one-parameter fiber of quaternions,
so inversion means picking a representative; two rules are provided, plus the
pure-vector (SKS) reduction along the fiber.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CollisionError
from .quat import IDENTITY, pure, qconj, qmul

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

#: Named chart conventions accepted wherever a defining vector is configured.
NAMED_CHARTS = {"KS1": E1, "KS3": E3}

#: The antipodal (singular-inversion) branch activates when 1 + c.x/|x| falls
#: below this; the regular rule loses a digit per decade of approach, so the
#: threshold bounds its error amplification at ~1e5.
EPS_POLE = 1e-10

_UNIT_TOL = 1e-9


def defining_vector(c: np.ndarray) -> np.ndarray:
    """Validating constructor: unit 3-vector, renormalized within 1e-9."""
    c = np.asarray(c, dtype=float)
    if c.shape != (3,):
        raise ValueError(f"defining vector must have 3 components, got shape {c.shape}")
    n = np.linalg.norm(c)
    if abs(n - 1.0) > _UNIT_TOL:
        raise ValueError(f"defining vector must be unit length, got |c| = {n!r}")
    return c / n


@dataclass(frozen=True)
class KSChart:
    """A KS chart: defining vector c and length scale alpha > 0."""

    c: np.ndarray
    alpha: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", defining_vector(self.c))
        object.__setattr__(self, "alpha", float(self.alpha))
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")

    @classmethod
    def named(cls, name: str, alpha: float = 1.0) -> "KSChart":
        """Chart from a convention name: "KS1" (c = e1) or "KS3" (c = e3)."""
        try:
            return cls(NAMED_CHARTS[name.upper()], alpha)
        except KeyError:
            raise ValueError(f"unknown chart name {name!r}; expected one of {sorted(NAMED_CHARTS)}") from None


def ks_forward(v: np.ndarray, chart: KSChart) -> np.ndarray:
    """Cartesian position of KS quaternion v: vector part of v (0,c) conj(v) / alpha.

    Total: v = 0 maps to the origin.  The scalar part of the product is
    identically zero because the chart quaternion (0, c) is pure.
    """
    v = np.asarray(v, dtype=float)
    return qmul(qmul(v, pure(chart.c)), qconj(v))[1:] / chart.alpha


def ks_radius(v: np.ndarray, chart: KSChart) -> float:
    """Radius |x| of the forward image, from the norm identity r = v.v / alpha."""
    v = np.asarray(v, dtype=float)
    return float(v @ v) / chart.alpha


def fiber_shift(v: np.ndarray, phi: float, c: np.ndarray) -> np.ndarray:
    """Move along the fiber of v: v (cos phi, sin phi c), same forward image."""
    g = np.empty(4)
    g[0] = np.cos(phi)
    g[1:] = np.sin(phi) * np.asarray(c, dtype=float)
    return qmul(v, g)


def orthogonal_completion(c: np.ndarray) -> np.ndarray:
    """Deterministic unit vector orthogonal to c.

    Uses normalize(c x a) where a is the standard basis vector with the
    smallest |component along c| (ties broken by lowest index), so the
    antipodal inversion branch is reproducible.
    """
    c = np.asarray(c, dtype=float)
    k = int(np.argmin(np.abs(c)))
    a = np.zeros(3)
    a[k] = 1.0
    n = np.cross(c, a)
    return n / np.linalg.norm(n)


def stable_r_plus_cx(x: np.ndarray, c: np.ndarray, r: float) -> float:
    """r + c.x without the near-antipodal cancellation.

    For c.x < 0 the direct sum loses ~log10(r/(r + c.x)) digits; the
    equivalent quotient |c x x|^2 / (r - c.x) does not, which keeps the
    inversion round trip at full precision down to the branch threshold.
    """
    cx = float(c @ x)
    if cx >= 0.0:
        return r + cx
    cross = np.cross(c, x)
    return float(cross @ cross) / (r - cx)


def ks_invert(x: np.ndarray, chart: KSChart) -> np.ndarray:
    """Fiber representative with the rotation-derived scalar part.

    Returns ``sqrt(alpha/2) (sqrt(r + c.x), (c x x)/sqrt(r + c.x))`` away
    from the antipodal direction.  Within EPS_POLE of x/|x| = -c the scalar
    part would vanish and the quotient degrade, so the singular branch
    ``sqrt(alpha r) (0, n)`` is used with the deterministic orthogonal
    completion n of c.
    """
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise CollisionError("cannot invert the KS map at the collision x = 0")
    q = stable_r_plus_cx(x, chart.c, r)
    if q / r < EPS_POLE:
        return np.sqrt(chart.alpha * r) * pure(orthogonal_completion(chart.c))
    s = np.sqrt(q)
    out = np.empty(4)
    out[0] = s
    out[1:] = np.cross(chart.c, x) / s
    return np.sqrt(chart.alpha / 2.0) * out


def ks_invert_sks(x: np.ndarray, chart: KSChart, sign: float = 1.0) -> np.ndarray:
    """Pure-vector (SKS) fiber representative.

    Returns ``sign * sqrt(alpha / (2 r (1 + c.x/r))) (0, x + r c)``; both
    signs lie on the same fiber.  Falls back to the singular branch of
    :func:`ks_invert` (already a pure vector) near the antipodal direction.
    """
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise CollisionError("cannot invert the KS map at the collision x = 0")
    q = stable_r_plus_cx(x, chart.c, r)
    if q / r < EPS_POLE:
        return sign * np.sqrt(chart.alpha * r) * pure(orthogonal_completion(chart.c))
    return sign * np.sqrt(chart.alpha / (2.0 * q)) * pure(x + r * chart.c)


def reduce_to_sks(v: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Reduce v along its fiber to the pure-vector representative.

    Returns ``(v_s, gauge, sign)`` with ``v_s = sign * v * gauge`` and
    ``gauge = (v.c, v0 c) / sqrt(v0^2 + (v.c)^2)``.  The scalar part of v_s
    vanishes algebraically.  The sign is reported so momenta can be reduced
    consistently; this function always picks +1 (flip downstream for
    trajectory sign continuity).

    When v0 = 0 and v.c = 0 the gauge is undefined, but v is then already a
    pure vector: it is returned unchanged with the identity gauge.
    """
    v = np.asarray(v, dtype=float)
    c = np.asarray(c, dtype=float)
    vc = v[1:] @ c
    n = np.hypot(v[0], vc)
    if n == 0.0:
        return v.copy(), IDENTITY.copy(), 1.0
    gauge = np.empty(4)
    gauge[0] = vc / n
    gauge[1:] = (v[0] / n) * c
    return qmul(v, gauge), gauge, 1.0


def enforce_sign_continuity(vs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Resolve the per-point sign freedom of sampled SKS vectors.

    Given quaternions sampled along one trajectory (shape (n, 4)), flips the
    sign at every point where the motion would otherwise appear
    discontinuous, i.e. where |v_k - v_{k-1}| > |v_k + v_{k-1}|.  Returns the
    adjusted array and the applied signs.  Stateful fold: apply sequentially
    per trajectory.
    """
    vs = np.asarray(vs, dtype=float)
    out = vs.copy()
    signs = np.ones(len(vs))
    for k in range(1, len(out)):
        if np.linalg.norm(out[k] - out[k - 1]) > np.linalg.norm(out[k] + out[k - 1]):
            out[k] = -out[k]
            signs[k] = -signs[k]
    return out, signs


def ks1_matrix(u: np.ndarray) -> np.ndarray:
    """The classical 4x4 L(u) matrix of the KS1 convention."""
    u1, u2, u3, u4 = np.asarray(u, dtype=float)
    return np.array([
        [u1, -u2, -u3, u4],
        [u2, u1, -u4, -u3],
        [u3, u4, u1, u2],
        [u4, -u3, u2, -u1],
    ])


def ks1_oracle(u: np.ndarray) -> tuple[np.ndarray, float]:
    """Legacy KS1 forward map via the L-matrix: x = first three rows of L(u) u.

    Agrees with :func:`ks_forward` on the KS1 chart (alpha = 1) under the
    index reassignment ``v = (-u4, u1, u2, u3)``.  The fourth component of
    L(u) u cancels identically.  Returns (x, r) with r = u.u.
    """
    u = np.asarray(u, dtype=float)
    x4 = ks1_matrix(u) @ u
    return x4[:3], float(u @ u)
