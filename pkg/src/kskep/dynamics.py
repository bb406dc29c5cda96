"""Hamiltonians, the Sundman time transformation, and equations of motion.

In Sundman time tau (d tau/d t = alpha/(4 r), the quarter-scale rate being
hard-wired so that v' = V) the extended-phase-space Hamiltonian reads

    K = V.V/2 + (4 V*/alpha^2) v.v - 4 mu/alpha + P(v, V, v*),

and on the manifold K = 0 its flow reproduces the physical motion.  The
unperturbed part is a 4D isotropic oscillator with frequency
omega0 = 2 sqrt(2 V*)/alpha.  Perturbations are supplied as value+gradient
callbacks (no automatic differentiation; the test suite validates gradients
by finite differences).  P must not depend on V*.

Sign conventions of the equations of motion follow the Poisson-bracket form:

    v' = V + dP/dV,  V' = -omega0^2 v - dP/dv,  (v*)' = 4 r/alpha,
    (V*)' = dP/dv*.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .canon import KSPhase, CartesianState, bilinear_invariant
from .errors import CollisionError, DegenerateState, UnboundOrbit
from .ksmap import KSChart
from .quat import qmul


class PerturbationTerm(NamedTuple):
    """Perturbation value with the gradient w.r.t. the 8 KS variables and v*."""

    value: float
    grad_v: np.ndarray
    grad_V: np.ndarray
    grad_vstar: float


_ZERO4 = np.zeros(4)


class Perturbation:
    """Base perturbation: P = 0.  Subclass and override :meth:`evaluate`.

    ``evaluate`` must be re-entrant; implementations receive the full phase,
    the chart, and mu, and return a :class:`PerturbationTerm`.  Select
    built-in terms by name in configs: "none" or "rotating_frame".
    """

    name = "none"

    def evaluate(self, p: KSPhase, chart: KSChart, mu: float) -> PerturbationTerm:
        return PerturbationTerm(0.0, _ZERO4, _ZERO4, 0.0)


NO_PERTURBATION = Perturbation()


def kepler_hamiltonian_cartesian(state: CartesianState) -> float:
    """Physical-time two-body energy X.X/2 - mu/r."""
    r = state.r
    if r == 0.0:
        raise CollisionError("Hamiltonian singular at r = 0")
    return 0.5 * float(state.X @ state.X) - state.mu / r


def ks_hamiltonian_unperturbed(p: KSPhase, chart: KSChart, mu: float) -> float:
    """Oscillator part K0 = V.V/2 + (4 V*/alpha^2) v.v - 4 mu/alpha.

    Zero on trajectories started with :func:`fix_energy_manifold` (and the
    perturbation value subtracted).  The off-manifold correction quadratic in
    J.c is available separately from :func:`constraint_energy_term`.
    """
    return (
        0.5 * float(p.V @ p.V)
        + 4.0 * p.V_star / chart.alpha**2 * float(p.v @ p.v)
        - 4.0 * mu / chart.alpha
    )


def constraint_energy_term(p: KSPhase, chart: KSChart) -> float:
    """Audit term -(J.c)^2 / (2 alpha r) omitted from K0 on the manifold."""
    jc = bilinear_invariant(p.v, p.V, chart.c)
    r = float(p.v @ p.v) / chart.alpha
    if r == 0.0:
        raise CollisionError("constraint energy term singular at v = 0")
    return -(jc * jc) / (2.0 * chart.alpha * r)


def constraint_energy_gradient(p: KSPhase, chart: KSChart) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the audit term w.r.t. (v, V), for off-manifold diagnostics.

    Every piece carries a factor of J.c, so the gradient vanishes on the
    constraint manifold even though the term must not be dropped blindly
    off it.
    """
    v, V, c = p.v, p.V, chart.c
    jc = bilinear_invariant(v, V, c)
    vv = float(v @ v)
    if vv == 0.0:
        raise CollisionError("constraint energy term singular at v = 0")
    r = vv / chart.alpha
    djc_dv = np.concatenate(([-(V[1:] @ c)], V[0] * c + np.cross(V[1:], c)))
    djc_dV = np.concatenate(([v[1:] @ c], -v[0] * c + np.cross(c, v[1:])))
    # d/dv of -(jc^2)/(2 alpha r) with r = v.v/alpha
    grad_v = -(jc / (chart.alpha * r)) * djc_dv + (jc * jc / (chart.alpha * r * vv)) * v
    grad_V = -(jc / (chart.alpha * r)) * djc_dV
    return grad_v, grad_V


def ks_hamiltonian(p: KSPhase, chart: KSChart, mu: float, pert: Perturbation = NO_PERTURBATION) -> float:
    """Full Sundman-time Hamiltonian K = K0 + P; conserved (at 0) along the flow."""
    return ks_hamiltonian_unperturbed(p, chart, mu) + pert.evaluate(p, chart, mu).value


def sundman_rate(r: float, chart: KSChart) -> float:
    """d tau/d t = alpha/(4 r)."""
    if not r > 0.0:
        raise CollisionError(f"Sundman rate singular at r = {r!r}")
    return chart.alpha / (4.0 * r)


def oscillator_frequency(V_star: float, chart: KSChart) -> float:
    """omega0 = 2 sqrt(2 V*)/alpha; requires the bound case V* > 0."""
    if not V_star > 0.0:
        raise UnboundOrbit(f"oscillator frequency requires V* > 0, got {V_star!r}")
    return 2.0 * np.sqrt(2.0 * V_star) / chart.alpha


def fix_energy_manifold(
    p: KSPhase, chart: KSChart, mu: float, pert: Perturbation = NO_PERTURBATION
) -> float:
    """Solve K = 0 for V* given the remaining state values.

    For perturbations independent of V* (all built-in ones) the solution is
    explicit and linear in V*.
    """
    vv = float(p.v @ p.v)
    if vv == 0.0:
        raise DegenerateState("cannot fix V*: coefficient v.v vanishes")
    pval = pert.evaluate(p, chart, mu).value
    return (4.0 * mu / chart.alpha - 0.5 * float(p.V @ p.V) - pval) * chart.alpha**2 / (4.0 * vv)


def make_eom(
    chart: KSChart, mu: float, pert: Perturbation = NO_PERTURBATION
) -> Callable[[float, np.ndarray], np.ndarray]:
    """State-derivative function f(tau, y) on packed states y = [v, V, v*, V*]."""
    alpha = chart.alpha
    inv_a2 = 1.0 / (alpha * alpha)
    unperturbed = pert is NO_PERTURBATION or type(pert) is Perturbation

    if unperturbed:

        def f(tau: float, y: np.ndarray) -> np.ndarray:
            v = y[0:4]
            out = np.empty(10)
            out[0:4] = y[4:8]
            out[4:8] = (-8.0 * y[9] * inv_a2) * v
            out[8] = 4.0 * (v @ v) * inv_a2
            out[9] = 0.0
            return out

        return f

    def f(tau: float, y: np.ndarray) -> np.ndarray:
        v = y[0:4]
        term = pert.evaluate(KSPhase.from_array(y), chart, mu)
        out = np.empty(10)
        out[0:4] = y[4:8] + term.grad_V
        out[4:8] = (-8.0 * y[9] * inv_a2) * v - term.grad_v
        out[8] = 4.0 * (v @ v) * inv_a2
        out[9] = term.grad_vstar
        return out

    return f


def ks_equations_of_motion(
    p: KSPhase, chart: KSChart, mu: float, pert: Perturbation = NO_PERTURBATION
) -> np.ndarray:
    """Sundman-time derivative of all 10 state components, packed like to_array()."""
    return make_eom(chart, mu, pert)(0.0, p.to_array())


def gauge_flow(
    v: np.ndarray, V: np.ndarray, c: np.ndarray, phi: float
) -> tuple[np.ndarray, np.ndarray]:
    """Finite flow of a J.c Hamiltonian term: motion along the fiber.

    Both quaternions are multiplied by (cos phi, sin phi c); the Cartesian
    image (position and momentum) and the constraint value are invariant.
    """
    g = np.empty(4)
    g[0] = np.cos(phi)
    g[1:] = np.sin(phi) * np.asarray(c, dtype=float)
    return qmul(v, g), qmul(V, g)


def oscillator_time(u: np.ndarray, U: np.ndarray, w: float, tau: float, alpha: float) -> float:
    """Elapsed physical time of the free oscillator flow, in closed form.

    Integrates (v*)' = 4 (v.v)/alpha^2 term by term along
    v(s) = cos(w s) u + sin(w s) U / w, which is exact for the unperturbed
    problem and for the rotating-frame solution (the frame rotation preserves
    v.v).  Requires w > 0.
    """
    u = np.asarray(u, dtype=float)
    U = np.asarray(U, dtype=float)
    uu, uU, UU = float(u @ u), float(u @ U), float(U @ U)
    s2 = np.sin(2.0 * w * tau)
    sn = np.sin(w * tau)
    return (4.0 / alpha**2) * (
        uu * (0.5 * tau + s2 / (4.0 * w))
        + uU * (sn * sn) / (w * w)
        + UU * (0.5 * tau - s2 / (4.0 * w)) / (w * w)
    )
