"""Canonical (Mathieu) extension of the KS point map.

Momenta transform both ways, tied together by the pairing X.dx = V.dv.  The
scalar part of the Cartesian momentum quaternion is X0 = (J.c)/(2r) with
``J = -v0 Vv + V0 vv + vv x Vv``; the bilinear constraint J.c = 0 makes the
extension consistent and holds exactly (up to round-off) for momenta built
by :func:`cartesian_to_momenta`.

Units: X is momentum per unit mass (velocity); V carries alpha^(1/2) times
velocity units; v carries length^(1/2).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import CollisionError, ConstraintViolation, PoleError
from .ksmap import EPS_POLE, KSChart, ks_forward, ks_invert, ks_invert_sks, stable_r_plus_cx
from .quat import pure, qconj, qmul

#: Constraint tolerance applied when ingesting externally supplied KS phases.
TOL_CONSTRAINT = 1e-10


@dataclass(frozen=True)
class CartesianState:
    """Cartesian position x, momentum-per-mass X, gravitational parameter mu."""

    x: np.ndarray
    X: np.ndarray
    mu: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(3))
        object.__setattr__(self, "X", np.asarray(self.X, dtype=float).reshape(3))
        object.__setattr__(self, "mu", float(self.mu))
        if not self.mu > 0.0:
            raise ValueError(f"mu must be positive, got {self.mu!r}")

    @property
    def r(self) -> float:
        return float(np.linalg.norm(self.x))


@dataclass(frozen=True)
class KSPhase:
    """KS coordinates v, momenta V, and the time-like pair (v*, V*).

    v* imitates physical time; V* fixes the zero-energy manifold (it equals
    minus the orbital energy when the perturbation is time-independent).
    """

    v: np.ndarray
    V: np.ndarray
    v_star: float = 0.0
    V_star: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(4))
        object.__setattr__(self, "V", np.asarray(self.V, dtype=float).reshape(4))
        object.__setattr__(self, "v_star", float(self.v_star))
        object.__setattr__(self, "V_star", float(self.V_star))

    def to_array(self) -> np.ndarray:
        """Pack as [v0..v3, V0..V3, v*, V*] for integrators."""
        return np.concatenate([self.v, self.V, [self.v_star, self.V_star]])

    @classmethod
    def from_array(cls, y: np.ndarray) -> "KSPhase":
        y = np.asarray(y, dtype=float)
        return cls(y[0:4], y[4:8], y[8], y[9])


def bilinear_invariant(v: np.ndarray, V: np.ndarray, c: np.ndarray) -> float:
    """The constraint value J.c with J = -v0 Vv + V0 vv + vv x Vv.

    Equals the defining-vector component of the quaternion cross product
    conj(v) ^ conj(V); zero for any momenta produced by
    :func:`cartesian_to_momenta`.
    """
    v = np.asarray(v, dtype=float)
    V = np.asarray(V, dtype=float)
    J = -v[0] * V[1:] + V[0] * v[1:] + np.cross(v[1:], V[1:])
    return float(J @ np.asarray(c, dtype=float))


def momenta_to_cartesian(v: np.ndarray, V: np.ndarray, chart: KSChart) -> tuple[np.ndarray, float]:
    """Cartesian momentum from KS momenta: X = vector part of V (0,c) conj(v) / (2r).

    Returns (X, X0); the scalar part X0 = (J.c)/(2r) is handed back for
    auditing and vanishes on the constraint manifold.
    """
    v = np.asarray(v, dtype=float)
    r = (v @ v) / chart.alpha
    if r == 0.0:
        raise CollisionError("momenta transformation undefined at v = 0")
    q = qmul(qmul(np.asarray(V, dtype=float), pure(chart.c)), qconj(v)) / (2.0 * r)
    return q[1:], float(q[0])


def cartesian_to_momenta(v: np.ndarray, X: np.ndarray, chart: KSChart) -> np.ndarray:
    """KS momenta from Cartesian momentum: V = 2 (0,X) v conj((0,c)) / alpha.

    The constructed pair (v, V) satisfies the bilinear constraint
    identically.
    """
    return 2.0 * qmul(qmul(pure(X), np.asarray(v, dtype=float)), qconj(pure(chart.c))) / chart.alpha


def sks_momenta(x: np.ndarray, X: np.ndarray, chart: KSChart, sign: float = 1.0) -> np.ndarray:
    """KS momenta paired with the SKS coordinate representative, from (x, X).

    Explicit in familiar quantities: the scalar part is (a factor times) the
    projection of the angular momentum on the defining vector,

        V0 = -sqrt(2/(alpha r (1 + c.x/r))) (x cross X).c,

    and the vector part combines momentum, radial velocity and angular
    momentum.  Consistent with :func:`cartesian_to_momenta` evaluated at
    ``ks_invert_sks(x, chart, sign)``.
    """
    x = np.asarray(x, dtype=float)
    X = np.asarray(X, dtype=float)
    c = chart.c
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise CollisionError("momenta undefined at the collision x = 0")
    q = stable_r_plus_cx(x, c, r)
    if q / r < EPS_POLE:
        raise PoleError(
            "SKS momenta are not given in closed form on the antipodal branch; "
            "use cartesian_to_momenta with the singular-branch representative"
        )
    f = np.sqrt(2.0 / (chart.alpha * q))
    xXc = np.cross(x, X)
    out = np.empty(4)
    out[0] = -f * (xXc @ c)
    out[1:] = f * (r * X + (x @ X) * c + np.cross(xXc, c))
    return sign * out


def reduce_momenta_sks(V: np.ndarray, gauge: np.ndarray, sign: float) -> np.ndarray:
    """Reduce momenta along the fiber with the gauge/sign from reduce_to_sks."""
    return sign * qmul(np.asarray(V, dtype=float), gauge)


def validate_phase(p: KSPhase, chart: KSChart, tol: float = TOL_CONSTRAINT) -> float:
    """Check the bilinear constraint of an externally supplied phase.

    Returns J.c when within ``tol * max(1, |v| |V|)``; otherwise raises
    ConstraintViolation.  Violations are never silently projected; see
    :func:`project_constraint` for the explicit opt-in repair.
    """
    jc = bilinear_invariant(p.v, p.V, chart.c)
    scale = max(1.0, float(np.linalg.norm(p.v)) * float(np.linalg.norm(p.V)))
    if abs(jc) > tol * scale:
        raise ConstraintViolation(
            f"bilinear constraint violated: |J.c| = {abs(jc):.3e} exceeds {tol:.1e} * {scale:.3e}"
        )
    return jc


def project_constraint(p: KSPhase, chart: KSChart) -> KSPhase:
    """Project a phase onto the constraint manifold J.c = 0.

    Removes the fiber-generator component of the momenta: V is rebuilt from
    the Cartesian momentum it maps to, which leaves x, X (and hence the
    physical trajectory) untouched.
    """
    X, _ = momenta_to_cartesian(p.v, p.V, chart)
    return replace(p, V=cartesian_to_momenta(p.v, X, chart))


def phase_from_cartesian(
    state: CartesianState,
    chart: KSChart,
    rep: str = "sks",
    sign: float = 1.0,
    v_star: float = 0.0,
) -> KSPhase:
    """Lift a Cartesian state to a KS phase.

    ``rep`` selects the fiber representative: "sks" (pure vector) or "rule1"
    (rotation-derived scalar part).  V* is set to minus the unperturbed
    two-body energy; re-fix it with dynamics.fix_energy_manifold when a
    perturbation is present.
    """
    if rep == "sks":
        v = ks_invert_sks(state.x, chart, sign)
        try:
            V = sks_momenta(state.x, state.X, chart, sign)
        except PoleError:
            V = cartesian_to_momenta(v, state.X, chart)
    elif rep == "rule1":
        v = ks_invert(state.x, chart)
        V = cartesian_to_momenta(v, state.X, chart)
    else:
        raise ValueError(f"unknown representative {rep!r}; expected 'sks' or 'rule1'")
    energy = 0.5 * float(state.X @ state.X) - state.mu / state.r
    return KSPhase(v, V, v_star=v_star, V_star=-energy)


def cartesian_from_phase(p: KSPhase, chart: KSChart, mu: float) -> CartesianState:
    """Project a KS phase back to the Cartesian state it represents."""
    x = ks_forward(p.v, chart)
    X, _ = momenta_to_cartesian(p.v, p.V, chart)
    return CartesianState(x, X, mu)
