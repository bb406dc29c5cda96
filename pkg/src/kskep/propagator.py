"""Fixed-step propagation in Sundman time, plus an independent Kepler oracle.

Two schemes: classic RK4 on an arbitrary state-derivative function, and a
Strang splitting ("split") that advances the unperturbed oscillator exactly
(including the physical-time quadrature) between half-step perturbation
kicks -- useful for long-run invariant studies.  The kick is exact for
perturbations whose gradient w.r.t. V vanishes; for others (e.g. the
rotating-frame term) it is first order inside the kick and RK4 should be
preferred.

The oracle propagates the unperturbed two-body problem in Cartesian
variables by universal variables (Stumpff functions + Newton iteration),
independent of everything KS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .canon import CartesianState, KSPhase, bilinear_invariant, momenta_to_cartesian
from .dynamics import NO_PERTURBATION, Perturbation, ks_hamiltonian_unperturbed
from .errors import CollisionError, NoConvergence, StepLimitExceeded
from .ksmap import KSChart, ks_forward

SCHEMES = ("rk4", "split")

#: Collision guard: integration aborts when r falls below this times alpha.
R_MIN_FACTOR = 1e-12


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed Sundman-time step, scheme ("rk4" | "split"), and step budget."""

    step: float
    scheme: str = "rk4"
    max_steps: int = 10_000_000

    def __post_init__(self) -> None:
        if not self.step > 0.0:
            raise ValueError(f"step must be positive, got {self.step!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.max_steps > 0:
            raise ValueError(f"max_steps must be positive, got {self.max_steps!r}")


@dataclass(frozen=True)
class InvariantReport:
    """Per-sample conservation audit: constraint value, K0, and full K."""

    jc: float
    k0: float
    k: float


@dataclass(frozen=True)
class TrajectorySample:
    tau: float
    t: float
    phase: KSPhase
    state: CartesianState
    report: InvariantReport


def sample_at(
    tau: float, phase: KSPhase, chart: KSChart, mu: float, pert: Perturbation = NO_PERTURBATION
) -> TrajectorySample:
    """Assemble a sample (derived Cartesian state + invariant report) at tau."""
    x = ks_forward(phase.v, chart)
    X, _ = momenta_to_cartesian(phase.v, phase.V, chart)
    jc = bilinear_invariant(phase.v, phase.V, chart.c)
    k0 = ks_hamiltonian_unperturbed(phase, chart, mu)
    k = k0 + pert.evaluate(phase, chart, mu).value
    return TrajectorySample(
        tau=tau,
        t=phase.v_star,
        phase=phase,
        state=CartesianState(x, X, mu),
        report=InvariantReport(jc=jc, k0=k0, k=k),
    )


def _rk4_step(f: Callable, tau: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(tau, y)
    k2 = f(tau + 0.5 * h, y + (0.5 * h) * k1)
    k3 = f(tau + 0.5 * h, y + (0.5 * h) * k2)
    k4 = f(tau + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def _oscillator_drift(y: np.ndarray, h: float, alpha: float) -> np.ndarray:
    """Exact flow of K0 over h: phase rotation plus the v* quadrature.

    Handles all three energy branches (V* > 0 trigonometric, V* = 0 free
    motion, V* < 0 hyperbolic); V* is constant along the drift.
    """
    v = y[0:4]
    V = y[4:8]
    om2 = 8.0 * y[9] / alpha**2
    vv, vV, VV = float(v @ v), float(v @ V), float(V @ V)
    out = np.empty(10)
    if om2 > 0.0:
        w = math.sqrt(om2)
        cw, sw = math.cos(w * h), math.sin(w * h)
        out[0:4] = cw * v + (sw / w) * V
        out[4:8] = (-w * sw) * v + cw * V
        s2 = math.sin(2.0 * w * h)
        quad = (
            vv * (0.5 * h + s2 / (4.0 * w))
            + vV * (sw * sw) / (w * w)
            + VV * (0.5 * h - s2 / (4.0 * w)) / (w * w)
        )
    elif om2 == 0.0:
        out[0:4] = v + h * V
        out[4:8] = V
        quad = vv * h + vV * h * h + VV * h**3 / 3.0
    else:
        k = math.sqrt(-om2)
        ch, sh = math.cosh(k * h), math.sinh(k * h)
        out[0:4] = ch * v + (sh / k) * V
        out[4:8] = (k * sh) * v + ch * V
        s2 = math.sinh(2.0 * k * h)
        quad = (
            vv * (0.5 * h + s2 / (4.0 * k))
            + vV * (sh * sh) / (k * k)
            + VV * (-0.5 * h + s2 / (4.0 * k)) / (k * k)
        )
    out[8] = y[8] + 4.0 * quad / alpha**2
    out[9] = y[9]
    return out


def _split_step(
    y: np.ndarray, h: float, chart: KSChart, mu: float, pert: Perturbation
) -> np.ndarray:
    def kick(z: np.ndarray, s: float) -> np.ndarray:
        term = pert.evaluate(KSPhase.from_array(z), chart, mu)
        out = z.copy()
        out[0:4] += s * term.grad_V
        out[4:8] -= s * term.grad_v
        out[9] += s * term.grad_vstar
        return out

    unperturbed = pert is NO_PERTURBATION or type(pert) is Perturbation
    if unperturbed:
        return _oscillator_drift(y, h, chart.alpha)
    y = kick(y, 0.5 * h)
    y = _oscillator_drift(y, h, chart.alpha)
    return kick(y, 0.5 * h)


def integrate(
    p0: KSPhase,
    eom: Callable[[float, np.ndarray], np.ndarray] | None,
    cfg: IntegratorConfig,
    tau_end: float | None,
    chart: KSChart,
    mu: float,
    pert: Perturbation = NO_PERTURBATION,
    stop_time: float | None = None,
) -> Iterator[TrajectorySample]:
    """Fixed-step integration from tau = 0, emitting one sample per step.

    The final tau lands within one step of ``tau_end`` (never short of it);
    ``tau_end = 0`` emits only the initial sample.  Alternatively a physical
    time span may be requested with ``stop_time``: stepping then continues
    until the v* channel first reaches it (tau_end is ignored).  ``eom``
    drives the rk4 scheme; the split scheme integrates K0 exactly and uses
    ``pert`` for the kicks, ignoring ``eom``.

    Raises StepLimitExceeded when the span needs more than ``cfg.max_steps``,
    and CollisionError if r falls below R_MIN_FACTOR * alpha along the way.
    """
    h = cfg.step
    if stop_time is None:
        if tau_end is None or tau_end < 0.0:
            raise ValueError("tau_end must be a nonnegative number when stop_time is unset")
        n_steps = 0 if tau_end == 0.0 else int(math.ceil(tau_end / h - 1e-12))
        if n_steps > cfg.max_steps:
            raise StepLimitExceeded(
                f"span tau = {tau_end!r} at step {h!r} needs {n_steps} steps "
                f"(budget {cfg.max_steps})"
            )
    else:
        n_steps = cfg.max_steps
    if cfg.scheme == "rk4" and eom is None:
        raise ValueError("rk4 scheme requires a state-derivative function")
    y = p0.to_array()
    r_min = R_MIN_FACTOR * chart.alpha
    yield sample_at(0.0, KSPhase.from_array(y), chart, mu, pert)
    if stop_time is not None and p0.v_star >= stop_time:
        return
    for i in range(1, n_steps + 1):
        if cfg.scheme == "rk4":
            y = _rk4_step(eom, (i - 1) * h, y, h)
        else:
            y = _split_step(y, h, chart, mu, pert)
        if (y[0:4] @ y[0:4]) / chart.alpha < r_min:
            raise CollisionError(f"collision at tau = {i * h!r}: r below {r_min!r}")
        yield sample_at(i * h, KSPhase.from_array(y), chart, mu, pert)
        if stop_time is not None and y[8] >= stop_time:
            return
    if stop_time is not None:
        raise StepLimitExceeded(
            f"physical time {stop_time!r} not reached within {cfg.max_steps} steps"
        )


def time_of(samples: Sequence[TrajectorySample]) -> np.ndarray:
    """Physical times of a sample stream (the v* channel)."""
    return np.array([s.t for s in samples])


def tau_at_time(samples: Sequence[TrajectorySample], t: float, chart: KSChart) -> float:
    """Invert the monotone (tau, t) relation of a trajectory by dense output.

    Cubic Hermite interpolation on the bracketing interval -- the slope
    dt/dtau = 4 r / alpha is known exactly at the samples -- refined by
    bisection to 1e-12.
    """
    taus = np.array([s.tau for s in samples])
    ts = time_of(samples)
    if not (ts[0] <= t <= ts[-1]):
        raise ValueError(f"t = {t!r} outside sampled range [{ts[0]!r}, {ts[-1]!r}]")
    k = int(np.searchsorted(ts, t, side="right") - 1)
    k = min(max(k, 0), len(ts) - 2)
    h = taus[k + 1] - taus[k]
    t0, t1 = ts[k], ts[k + 1]
    d0 = 4.0 * ks_radius_of(samples[k], chart) / chart.alpha
    d1 = 4.0 * ks_radius_of(samples[k + 1], chart) / chart.alpha

    def hermite(s: float) -> float:
        # s in [0, 1] on the bracketing interval
        s2, s3 = s * s, s * s * s
        return (
            (2 * s3 - 3 * s2 + 1) * t0
            + (s3 - 2 * s2 + s) * h * d0
            + (-2 * s3 + 3 * s2) * t1
            + (s3 - s2) * h * d1
        )

    lo, hi = 0.0, 1.0
    while (hi - lo) * h > 1e-12:
        mid = 0.5 * (lo + hi)
        if hermite(mid) < t:
            lo = mid
        else:
            hi = mid
    return float(taus[k] + 0.5 * (lo + hi) * h)


def ks_radius_of(sample: TrajectorySample, chart: KSChart) -> float:
    v = sample.phase.v
    return float(v @ v) / chart.alpha


def _stumpff(z: float) -> tuple[float, float]:
    """Stumpff C(z), S(z) with series fallback near z = 0."""
    if z > 1e-6:
        sz = math.sqrt(z)
        return (1.0 - math.cos(sz)) / z, (sz - math.sin(sz)) / (sz * z)
    if z < -1e-6:
        sz = math.sqrt(-z)
        return (math.cosh(sz) - 1.0) / (-z), (math.sinh(sz) - sz) / (sz * -z)
    return (
        0.5 - z / 24.0 + z * z / 720.0 - z**3 / 40320.0,
        1.0 / 6.0 - z / 120.0 + z * z / 5040.0 - z**3 / 362880.0,
    )


def kepler_oracle(s0: CartesianState, t: float, tol: float = 1e-13, max_iter: int = 50) -> CartesianState:
    """Unperturbed two-body propagation by universal variables.

    Conserves energy and angular momentum to round-off (the f-g construction
    keeps the motion in the osculating plane exactly).  Elliptic spans are
    reduced modulo the period before iterating.
    """
    x0 = s0.x
    X0 = s0.X
    mu = s0.mu
    r0 = s0.r
    if r0 == 0.0:
        raise CollisionError("oracle undefined at the collision x = 0")
    dt = float(t)
    smu = math.sqrt(mu)
    vr0 = float(x0 @ X0) / r0
    ainv = 2.0 / r0 - float(X0 @ X0) / mu  # 1/a; > 0 elliptic
    if ainv > 1e-12:
        period = 2.0 * math.pi / (smu * ainv**1.5)
        dt -= math.floor(dt / period) * period
    if dt == 0.0:
        return CartesianState(x0.copy(), X0.copy(), mu)
    chi = smu * abs(ainv) * dt if abs(ainv) > 1e-12 else smu * dt / r0
    scale = max(1.0, smu * abs(dt))
    converged = False
    for _ in range(max_iter):
        z = ainv * chi * chi
        C, S = _stumpff(z)
        F = (
            r0 * vr0 / smu * chi * chi * C
            + (1.0 - ainv * r0) * chi**3 * S
            + r0 * chi
            - smu * dt
        )
        dF = r0 * vr0 / smu * chi * (1.0 - z * S) + (1.0 - ainv * r0) * chi * chi * C + r0
        chi -= F / dF
        if abs(F) <= tol * scale:
            converged = True
            break
    if not converged:
        raise NoConvergence(
            f"universal Kepler equation did not reach |F| <= {tol!r} in {max_iter} iterations"
        )
    z = ainv * chi * chi
    C, S = _stumpff(z)
    f = 1.0 - chi * chi * C / r0
    g = dt - chi**3 * S / smu
    x = f * x0 + g * X0
    r = float(np.linalg.norm(x))
    fdot = smu / (r * r0) * chi * (z * S - 1.0)
    gdot = 1.0 - chi * chi * C / r
    return CartesianState(x, fdot * x0 + gdot * X0, mu)
