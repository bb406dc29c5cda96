"""First integrals of the unperturbed flow, in both pictures.

Oscillator side: the per-axis energies, the symmetric Fradkin tensor
``F_ij = V_i V_j / omega0 + omega0 v_i v_j`` and the antisymmetric angular
momentum matrix ``L_ij = v_i V_j - v_j V_i``.  Kepler side: the angular
momentum G and the Laplace (Runge-Lenz) vector e, the latter by three
equivalent routes (Cartesian definition, quaternion-product form, Fradkin
assembly) which agree on the constraint manifold.

Route conditioning near r -> 0, measured on exact pericenter states down to
r ~ 1e-8: all three routes hold machine precision, so none is prescribed.
The Fradkin route alone avoids explicit division by r (audit terms aside)
but requires a bound orbit (omega0 real); the Cartesian route is the only
one available for unbound states.
"""

from __future__ import annotations

import numpy as np

from .canon import CartesianState, KSPhase, bilinear_invariant, momenta_to_cartesian
from .errors import CollisionError, UnboundOrbit
from .ksmap import KSChart, ks_forward
from .quat import pure, qconj, qcross, qmul


def _require_bound(omega0: float) -> float:
    if not omega0 > 0.0:
        raise UnboundOrbit(f"Fradkin-route operations require omega0 > 0, got {omega0!r}")
    return float(omega0)


def oscillator_energies(v: np.ndarray, V: np.ndarray, omega0: float) -> np.ndarray:
    """Per-axis oscillator energies N_j = V_j^2/2 + omega0^2 v_j^2/2.

    Their sum is 4 mu/alpha on the K0 = 0 manifold.
    """
    omega0 = _require_bound(omega0)
    v = np.asarray(v, dtype=float)
    V = np.asarray(V, dtype=float)
    return 0.5 * V * V + 0.5 * (omega0 * v) * (omega0 * v)


def fradkin_tensor(v: np.ndarray, V: np.ndarray, omega0: float) -> np.ndarray:
    """Symmetric 4x4 first-integral tensor F_ij = V_i V_j/omega0 + omega0 v_i v_j.

    Diagonal F_ii = 2 N_i / omega0.
    """
    omega0 = _require_bound(omega0)
    v = np.asarray(v, dtype=float)
    V = np.asarray(V, dtype=float)
    return np.outer(V, V) / omega0 + omega0 * np.outer(v, v)


def angular_momentum_matrix(v: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Antisymmetric 4x4 matrix L_ij = v_i V_j - v_j V_i."""
    m = np.outer(np.asarray(v, dtype=float), np.asarray(V, dtype=float))
    return m - m.T


def angular_momentum_cartesian(p: KSPhase, chart: KSChart) -> np.ndarray:
    """Keplerian angular momentum G = x cross X from KS variables.

    G = (v ^ V)/2 + X0 x with X0 = (J.c)/(2r); on the constraint manifold
    the second term vanishes and the defining vector has no direct effect on
    the direction of G.
    """
    x = ks_forward(p.v, chart)
    r = float(p.v @ p.v) / chart.alpha
    if r == 0.0:
        raise CollisionError("angular momentum undefined at v = 0")
    jc = bilinear_invariant(p.v, p.V, chart.c)
    return 0.5 * qcross(p.v, p.V)[1:] + (jc / (2.0 * r)) * x


def laplace_vector_cartesian(state: CartesianState) -> np.ndarray:
    """Laplace vector from its Cartesian definition: mu e = (X.X - mu/r) x - (x.X) X."""
    r = state.r
    if r == 0.0:
        raise CollisionError("Laplace vector singular at r = 0")
    XX = float(state.X @ state.X)
    xX = float(state.x @ state.X)
    return ((XX - state.mu / r) * state.x - xX * state.X) / state.mu


def laplace_vector_ks(p: KSPhase, chart: KSChart, mu: float) -> np.ndarray:
    """Laplace vector as a quaternion product of the KS variables.

    mu e = (1/2r) [ ((V.V/2 - 2 mu/alpha + (J.c)^2/(2 alpha r)) v
                     - (v.V/2) V) (0,c) conj(v) ]^vec.

    The (J.c)^2 audit term is zero-valued on the constraint manifold, where
    this route equals the Cartesian one; off the manifold the routes spread,
    which the `check` report surfaces as a constraint diagnostic.
    """
    v, V = p.v, p.V
    r = float(v @ v) / chart.alpha
    if r == 0.0:
        raise CollisionError("Laplace vector singular at v = 0")
    jc = bilinear_invariant(v, V, chart.c)
    a = 0.5 * float(V @ V) - 2.0 * mu / chart.alpha + jc * jc / (2.0 * chart.alpha * r)
    b = 0.5 * float(v @ V)
    q = qmul(qmul(a * v - b * V, pure(chart.c)), qconj(v))
    return q[1:] / (2.0 * r) / mu


def laplace_matrix(F: np.ndarray) -> np.ndarray:
    """3x3 matrix assembled from Fradkin entries; mirrors the structure of the
    rotation matrix behind the point transformation.

    Off-diagonal: E[0,1] = F12 - F03, E[1,0] = F12 + F03, and cyclic;
    diagonal: E11 = (F00 + F11 - F22 - F33)/2, etc.
    """
    F = np.asarray(F, dtype=float)
    e11 = 0.5 * (F[0, 0] + F[1, 1] - F[2, 2] - F[3, 3])
    e22 = 0.5 * (F[0, 0] - F[1, 1] + F[2, 2] - F[3, 3])
    e33 = 0.5 * (F[0, 0] - F[1, 1] - F[2, 2] + F[3, 3])
    return np.array([
        [e11, F[1, 2] - F[0, 3], F[1, 3] + F[0, 2]],
        [F[1, 2] + F[0, 3], e22, F[2, 3] - F[0, 1]],
        [F[1, 3] - F[0, 2], F[2, 3] + F[0, 1], e33],
    ])


def laplace_vector_fradkin(
    F: np.ndarray,
    c: np.ndarray,
    omega0: float,
    chart: KSChart,
    mu: float,
    K0: float = 0.0,
    X0: float = 0.0,
    G: np.ndarray | None = None,
    x: np.ndarray | None = None,
) -> np.ndarray:
    """Laplace vector from the Fradkin tensor:

    mu e = -(alpha omega0/4) E c - X0 G + (alpha K0/(4 r)) x.

    K0 and X0 are explicit inputs (not recomputed) so off-manifold audits
    are possible; on the constraint and energy manifolds the last two terms
    vanish and G, x need not be supplied.
    """
    omega0 = _require_bound(omega0)
    mue = -(chart.alpha * omega0 / 4.0) * (laplace_matrix(F) @ np.asarray(c, dtype=float))
    if X0 != 0.0:
        if G is None:
            raise ValueError("off-manifold audit (X0 != 0) requires G")
        mue = mue - X0 * np.asarray(G, dtype=float)
    if K0 != 0.0:
        if x is None:
            raise ValueError("off-energy-manifold audit (K0 != 0) requires x")
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        if r == 0.0:
            raise CollisionError("Laplace vector singular at r = 0")
        mue = mue + (chart.alpha * K0 / (4.0 * r)) * x
    return mue / mu


def laplace_vector_fradkin_from_phase(p: KSPhase, chart: KSChart, mu: float) -> np.ndarray:
    """Convenience wrapper: Fradkin-route Laplace vector with audit terms filled in."""
    omega0 = 2.0 * np.sqrt(2.0 * p.V_star) / chart.alpha if p.V_star > 0.0 else 0.0
    omega0 = _require_bound(omega0)
    F = fradkin_tensor(p.v, p.V, omega0)
    r = float(p.v @ p.v) / chart.alpha
    if r == 0.0:
        raise CollisionError("Laplace vector singular at v = 0")
    jc = bilinear_invariant(p.v, p.V, chart.c)
    k0 = 0.5 * float(p.V @ p.V) + 0.5 * omega0**2 * float(p.v @ p.v) - 4.0 * mu / chart.alpha
    return laplace_vector_fradkin(
        F,
        chart.c,
        omega0,
        chart,
        mu,
        K0=k0,
        X0=jc / (2.0 * r),
        G=angular_momentum_cartesian(p, chart),
        x=ks_forward(p.v, chart),
    )


def invariant_report(p: KSPhase, chart: KSChart, mu: float) -> dict:
    """All first integrals of a phase, by every available route.

    Returns energies, G (two routes), e (up to three routes), the constraint
    value, K0, and the pairwise route disagreements.  Unbound states skip the
    Fradkin route (reported as None) rather than failing entirely.
    """
    state = CartesianState(ks_forward(p.v, chart), momenta_to_cartesian(p.v, p.V, chart)[0], mu)
    energy = 0.5 * float(state.X @ state.X) - mu / state.r
    jc = bilinear_invariant(p.v, p.V, chart.c)
    k0 = (
        0.5 * float(p.V @ p.V)
        + 4.0 * p.V_star / chart.alpha**2 * float(p.v @ p.v)
        - 4.0 * mu / chart.alpha
    )
    g_cart = np.cross(state.x, state.X)
    g_ks = angular_momentum_cartesian(p, chart)
    e_cart = laplace_vector_cartesian(state)
    e_ks = laplace_vector_ks(p, chart, mu)
    unbound = not p.V_star > 0.0
    e_fradkin = None
    energies = None
    if not unbound:
        omega0 = 2.0 * np.sqrt(2.0 * p.V_star) / chart.alpha
        energies = oscillator_energies(p.v, p.V, omega0)
        e_fradkin = laplace_vector_fradkin_from_phase(p, chart, mu)
    routes = [e_cart, e_ks] + ([e_fradkin] if e_fradkin is not None else [])
    spread = max(
        float(np.max(np.abs(a - b))) for i, a in enumerate(routes) for b in routes[i + 1:]
    ) if len(routes) > 1 else 0.0
    return {
        "energy": energy,
        "V_star": p.V_star,
        "K0": k0,
        "Jc": jc,
        "oscillator_energies": None if energies is None else [float(n) for n in energies],
        "angular_momentum": {
            "cartesian": [float(a) for a in g_cart],
            "ks": [float(a) for a in g_ks],
            "disagreement": float(np.max(np.abs(g_cart - g_ks))),
        },
        "laplace": {
            "cartesian": [float(a) for a in e_cart],
            "ks": [float(a) for a in e_ks],
            "fradkin": None if e_fradkin is None else [float(a) for a in e_fradkin],
            "max_disagreement": spread,
        },
        "conic_identity_residual": float(
            (e_cart @ e_cart) - 1.0 - 2.0 * energy * float(g_cart @ g_cart) / mu**2
        ),
        "unbound": unbound,
    }
