"""The Kepler problem in a uniformly rotating frame, in KS variables.

The frame's angular velocity is Omega * c: aligning the rotation axis with
the defining vector is what makes the problem collapse to closed form.  The
transformation to the frame is time dependent and adds -Omega G.c to the
Hamiltonian; because a multiple of the constraint J.c only moves the state
along fibers, that term may be traded for the modified perturbation

    P_m = -(4 r/alpha) Omega H,   H = (vv x Vv).c,

which involves the vector parts alone.  H is a constant of motion, the
frequency w = 2 sqrt(2 (V* - Omega H))/alpha is therefore constant, and the
flow splits into a plain scalar oscillator plus a vector oscillator swept by
the frame rotation evaluated at the physical time t(tau).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .canon import CartesianState, KSPhase, bilinear_invariant
from .dynamics import Perturbation, PerturbationTerm, oscillator_time
from .errors import UnboundOrbit
from .ksmap import KSChart, defining_vector
from .quat import rotation_matrix


@dataclass(frozen=True)
class RotatingFrameSpec:
    """Uniformly rotating frame with angular velocity vector omega * c."""

    omega: float
    c: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "c", defining_vector(self.c))


@dataclass(frozen=True)
class RotSolutionCoeffs:
    """Closed-form solution coefficients at one Sundman time.

    b1 = b4 = cos(w tau), b2 = sin(w tau)/w, b3 = -w sin(w tau); A is the
    orthogonal matrix rotating the vector parts about c by -Omega t(tau).
    """

    w: float
    b1: float
    b2: float
    b3: float
    b4: float
    A: np.ndarray


def rotation_quaternion(spec: RotatingFrameSpec, t: float) -> np.ndarray:
    """Unit quaternion (cos(Omega t/2), -sin(Omega t/2) c) mapping fixed -> rotating."""
    half = 0.5 * spec.omega * t
    q = np.empty(4)
    q[0] = np.cos(half)
    q[1:] = -np.sin(half) * spec.c
    return q


def to_rotating_frame(state: CartesianState, spec: RotatingFrameSpec, t: float) -> CartesianState:
    """Rotate a fixed-frame state into the frame; the frames coincide at t = 0."""
    R = rotation_matrix(rotation_quaternion(spec, t))
    return CartesianState(R @ state.x, R @ state.X, state.mu)


def from_rotating_frame(state: CartesianState, spec: RotatingFrameSpec, t: float) -> CartesianState:
    """Inverse of :func:`to_rotating_frame`."""
    R = rotation_matrix(rotation_quaternion(spec, t))
    return CartesianState(R.T @ state.x, R.T @ state.X, state.mu)


def h_invariant(v: np.ndarray, V: np.ndarray, c: np.ndarray) -> float:
    """H = (vv x Vv).c, the conserved vector-part angular momentum along c."""
    v = np.asarray(v, dtype=float)
    V = np.asarray(V, dtype=float)
    return float(np.cross(v[1:], V[1:]) @ np.asarray(c, dtype=float))


def rot_perturbation_modified(p: KSPhase, chart: KSChart, spec: RotatingFrameSpec) -> float:
    """Modified rotating-frame term P_m = -(4 r/alpha) Omega H."""
    r = float(p.v @ p.v) / chart.alpha
    return -(4.0 * r / chart.alpha) * spec.omega * h_invariant(p.v, p.V, chart.c)


def rot_perturbation_raw(p: KSPhase, chart: KSChart, spec: RotatingFrameSpec) -> float:
    """Raw rotating-frame remainder P = -(4 r Omega/alpha) G.c.

    G includes the X0 x term, so P differs from the modified form by a
    multiple of J.c: zero-valued on the constraint manifold but with a
    different gradient (the two generate the same Cartesian motion, reached
    along different fibers).
    """
    # G.c = H - (J.c)(r - x.c)/(2r) and r - x.c = (2/alpha)(|vv|^2 - (c.vv)^2),
    # an identity of the forward map; avoids assembling x and X explicitly.
    v, V, c = p.v, p.V, chart.c
    jc = bilinear_invariant(v, V, c)
    b = (2.0 / chart.alpha) * (float(v[1:] @ v[1:]) - float(v[1:] @ c) ** 2)
    return rot_perturbation_modified(p, chart, spec) + (2.0 * spec.omega / chart.alpha) * jc * b


class RotatingFrameModified(Perturbation):
    """Value+gradient callback for the modified term P_m = -(4 r/alpha) Omega H."""

    name = "rotating_frame"

    def __init__(self, spec: RotatingFrameSpec):
        self.spec = spec

    def evaluate(self, p: KSPhase, chart: KSChart, mu: float) -> PerturbationTerm:
        v, V, c = p.v, p.V, chart.c
        k = 4.0 * self.spec.omega / chart.alpha**2
        vv = float(v @ v)
        h = float(np.cross(v[1:], V[1:]) @ c)
        grad_v = np.empty(4)
        grad_v[0] = -2.0 * k * v[0] * h
        grad_v[1:] = -2.0 * k * h * v[1:] - k * vv * np.cross(V[1:], c)
        grad_V = np.empty(4)
        grad_V[0] = 0.0
        grad_V[1:] = -k * vv * np.cross(c, v[1:])
        return PerturbationTerm(-k * vv * h, grad_v, grad_V, 0.0)


class RotatingFrameRaw(Perturbation):
    """Value+gradient callback for the raw term P = -(4 r Omega/alpha) G.c.

    On the constraint manifold the value coincides with the modified term,
    but the gradient of the J.c part survives (a zero-valued function with
    nonzero derivatives), so the two drive different fiber motion.
    """

    name = "rotating_frame_raw"

    def __init__(self, spec: RotatingFrameSpec):
        self.spec = spec
        self._mod = RotatingFrameModified(spec)

    def evaluate(self, p: KSPhase, chart: KSChart, mu: float) -> PerturbationTerm:
        base = self._mod.evaluate(p, chart, mu)
        v, V, c = p.v, p.V, chart.c
        jc = bilinear_invariant(v, V, c)
        b = (2.0 / chart.alpha) * (float(v[1:] @ v[1:]) - float(v[1:] @ c) ** 2)
        s = 2.0 * self.spec.omega / chart.alpha
        djc_dv = np.concatenate(([-(V[1:] @ c)], V[0] * c + np.cross(V[1:], c)))
        djc_dV = np.concatenate(([v[1:] @ c], -v[0] * c + np.cross(c, v[1:])))
        db_dv = np.concatenate(([0.0], (4.0 / chart.alpha) * (v[1:] - (v[1:] @ c) * c)))
        grad_v = base.grad_v + s * (b * djc_dv + jc * db_dv)
        grad_V = base.grad_V + s * (b * djc_dV)
        return PerturbationTerm(base.value + s * jc * b, grad_v, grad_V, 0.0)


def rot_frequency(V_star: float, H: float, chart: KSChart, spec: RotatingFrameSpec) -> float:
    """Constant oscillator frequency w = 2 sqrt(2 (V* - Omega H))/alpha.

    Reduces to the fixed-frame omega0 when Omega = 0 or H = 0.
    """
    arg = V_star - spec.omega * H
    if not arg > 0.0:
        raise UnboundOrbit(f"rotating-frame frequency requires V* - Omega H > 0, got {arg!r}")
    return 2.0 * np.sqrt(2.0 * arg) / chart.alpha


def cross_product_matrix(spec: RotatingFrameSpec) -> np.ndarray:
    """Antisymmetric C with C y = Omega (c x y)."""
    c1, c2, c3 = spec.c
    return spec.omega * np.array([
        [0.0, -c3, c2],
        [c3, 0.0, -c1],
        [-c2, c1, 0.0],
    ])


def _rotate_about(c: np.ndarray, angle: float, y: np.ndarray) -> np.ndarray:
    """Rotate y about unit axis c, axis-split so the axis channel is untouched.

    With the Rodrigues form split as parallel + rotated perpendicular parts,
    an exact-basis axis (e.g. c = e3) leaves its coordinate channel bitwise
    unchanged, matching the structure of the closed-form solution.
    """
    par = (c @ y) * c
    per = y - par
    return par + np.cos(angle) * per + np.sin(angle) * np.cross(c, per)


def closed_form_time(u: np.ndarray, U: np.ndarray, tau: float, chart: KSChart, w: float) -> float:
    """Physical time elapsed by the closed-form solution at Sundman time tau.

    The frame rotation preserves v.v, so t(tau) is the plain oscillator
    quadrature of (v*)' = 4 r/alpha regardless of Omega.
    """
    return oscillator_time(u, U, w, tau, chart.alpha)


def closed_form_propagate(
    u: np.ndarray,
    U: np.ndarray,
    tau: float,
    chart: KSChart,
    spec: RotatingFrameSpec,
    w: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form rotating-frame solution at Sundman time tau.

    Scalar parts follow the 1D oscillator; vector parts are the oscillator
    combination swept by the rotation about c through -Omega times the
    elapsed physical time (the closed-form quadrature).  At tau = 0 returns
    (u, U).  The frames coincide at the start of propagation; a nonzero
    epoch only offsets the v* bookkeeping (see :func:`closed_form_sample`),
    it never enters the solution itself.
    """
    if not w > 0.0:
        raise UnboundOrbit(f"closed form requires w > 0, got {w!r}")
    u = np.asarray(u, dtype=float)
    U = np.asarray(U, dtype=float)
    cw = np.cos(w * tau)
    sw = np.sin(w * tau)
    osc_v = cw * u + (sw / w) * U
    osc_V = (-w * sw) * u + cw * U
    v = np.empty(4)
    V = np.empty(4)
    v[0], V[0] = osc_v[0], osc_V[0]
    if spec.omega == 0.0:
        v[1:], V[1:] = osc_v[1:], osc_V[1:]
    else:
        angle = -spec.omega * closed_form_time(u, U, tau, chart, w)
        v[1:] = _rotate_about(spec.c, angle, osc_v[1:])
        V[1:] = _rotate_about(spec.c, angle, osc_V[1:])
    return v, V


def solution_coefficients(
    u: np.ndarray,
    U: np.ndarray,
    tau: float,
    chart: KSChart,
    spec: RotatingFrameSpec,
    w: float,
) -> RotSolutionCoeffs:
    """The (b_j, A) decomposition of the closed-form solution, for inspection."""
    t = closed_form_time(u, U, tau, chart, w)
    A = rotation_matrix(rotation_quaternion(spec, t))
    sw = np.sin(w * tau)
    cw = np.cos(w * tau)
    return RotSolutionCoeffs(w=w, b1=cw, b2=sw / w, b3=-w * sw, b4=cw, A=A)


def closed_form_sample(
    p0: KSPhase, tau: float, chart: KSChart, spec: RotatingFrameSpec, w: float
) -> KSPhase:
    """Propagate a full phase, carrying v* and the constant V* along."""
    v, V = closed_form_propagate(p0.v, p0.V, tau, chart, spec, w)
    t = closed_form_time(p0.v, p0.V, tau, chart, w)
    return KSPhase(v, V, v_star=p0.v_star + t, V_star=p0.V_star)


def make_rot_eom(chart: KSChart, spec: RotatingFrameSpec):
    """Packed state-derivative function of the rotating-frame equations of motion.

    Equivalent to the general equations with the modified perturbation: the
    scalar pair is a plain oscillator (no Omega term), the vector pair picks
    up the frame sweep, and w^2 = 8 (V* - Omega H)/alpha^2 is evaluated from
    the (conserved) current state.
    """
    alpha = chart.alpha
    c = spec.c
    om = spec.omega

    def f(tau: float, y: np.ndarray) -> np.ndarray:
        v = y[0:4]
        V = y[4:8]
        vv = v @ v
        h = np.cross(v[1:], V[1:]) @ c
        w2 = 8.0 * (y[9] - om * h) / alpha**2
        sweep = 4.0 * vv / alpha**2 * om
        out = np.empty(10)
        out[0] = V[0]
        out[1:4] = V[1:] - sweep * np.cross(c, v[1:])
        out[4] = -w2 * v[0]
        out[5:8] = -w2 * v[1:] - sweep * np.cross(c, V[1:])
        out[8] = 4.0 * vv / alpha**2
        out[9] = 0.0
        return out

    return f


def rot_equations_of_motion(p: KSPhase, chart: KSChart, spec: RotatingFrameSpec) -> np.ndarray:
    """Sundman-time derivative of all 10 components, packed like to_array()."""
    return make_rot_eom(chart, spec)(0.0, p.to_array())
