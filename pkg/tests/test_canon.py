import numpy as np
import pytest

from conftest import (
    oracle_qconj,
    oracle_qcross,
    rand_bound_state,
    rand_chart,
    rand_constrained_phase,
    rand_unit_vector,
)
from kskep.canon import (
    CartesianState,
    KSPhase,
    bilinear_invariant,
    cartesian_from_phase,
    cartesian_to_momenta,
    momenta_to_cartesian,
    phase_from_cartesian,
    project_constraint,
    reduce_momenta_sks,
    sks_momenta,
    validate_phase,
)
from kskep.errors import CollisionError, ConstraintViolation, PoleError
from kskep.ksmap import ks_forward, ks_invert_sks, reduce_to_sks
from kskep.quat import IDENTITY, pure

E1, E2, E3 = np.eye(3)


class TestTypes:
    def test_cartesian_state_validation(self):
        with pytest.raises(ValueError):
            CartesianState(E1, E2, mu=0.0)
        s = CartesianState([1, 0, 0], [0, 1, 0], 1.0)
        assert s.r == 1.0

    def test_phase_pack_round_trip(self, rng):
        p = KSPhase(rng.normal(size=4), rng.normal(size=4), 0.3, 0.7)
        q = KSPhase.from_array(p.to_array())
        assert np.array_equal(p.v, q.v) and np.array_equal(p.V, q.V)
        assert (p.v_star, p.V_star) == (q.v_star, q.V_star)


class TestMomentaToCartesian:
    def test_frozen_example(self, ks3):
        # v = identity, V = (0, P): X = ((P2, -P1, 0))/2, X0 = -P3/2
        X, X0 = momenta_to_cartesian(np.array([1.0, 0, 0, 0]), np.array([0.0, 1.0, 2.0, 3.0]), ks3)
        assert np.allclose(X, [1.0, -0.5, 0.0])
        assert X0 == -1.5

    def test_linearity_zero(self, rng, ks3):
        v = rng.normal(size=4)
        X, X0 = momenta_to_cartesian(v, np.zeros(4), ks3)
        assert np.array_equal(X, np.zeros(3)) and X0 == 0.0

    def test_collision(self, ks3):
        with pytest.raises(CollisionError):
            momenta_to_cartesian(np.zeros(4), np.ones(4), ks3)

    def test_round_trip_both_ways(self, rng):
        for _ in range(300):
            chart = rand_chart(rng)
            v = rng.normal(size=4)
            X = rng.normal(size=3)
            V = cartesian_to_momenta(v, X, chart)
            X2, X0 = momenta_to_cartesian(v, V, chart)
            assert np.allclose(X2, X, rtol=1e-12, atol=1e-13)
            assert abs(X0) <= 1e-13 * max(1.0, np.linalg.norm(V))
            V2 = cartesian_to_momenta(v, X2, chart)
            assert np.allclose(V2, V, rtol=1e-12, atol=1e-13)


class TestCartesianToMomenta:
    def test_zero(self, rng, ks3):
        assert np.array_equal(cartesian_to_momenta(rng.normal(size=4), np.zeros(3), ks3), np.zeros(4))

    def test_frozen_sks_example(self, ks3):
        # v from the SKS inverse of x = e3; X = (p, 0, 0) -> V = (0, 2p, 0, 0)
        p = 0.37
        v = ks_invert_sks(E3, ks3)
        V = cartesian_to_momenta(v, np.array([p, 0.0, 0.0]), ks3)
        assert np.allclose(V, [0.0, 2.0 * p, 0.0, 0.0], atol=1e-15)
        X, _ = momenta_to_cartesian(v, V, ks3)
        assert np.allclose(X, [p, 0.0, 0.0], atol=1e-15)

    def test_constraint_exact(self, rng):
        for _ in range(1000):
            chart = rand_chart(rng)
            v = rng.normal(size=4)
            X = rng.normal(size=3)
            V = cartesian_to_momenta(v, X, chart)
            scale = max(1.0, np.linalg.norm(v) * np.linalg.norm(V))
            assert abs(bilinear_invariant(v, V, chart.c)) <= 1e-13 * scale


class TestBilinearInvariant:
    def test_parallel_pair(self, rng, ks3):
        v = rng.normal(size=4)
        assert abs(bilinear_invariant(v, 2.5 * v, ks3.c)) < 1e-14

    def test_cross_term_orthogonal(self, ks3):
        # v = e3-pure, V = e1-pure: J = e3 x e1 = e2, orthogonal to c = e3
        assert bilinear_invariant(pure(E3), pure(E1), ks3.c) == 0.0

    def test_ks1_component_form(self, rng, ks1):
        # with c = e1 and the index reassignment, J.c is the classical
        # u4 u1' - u3 u2' + u2 u3' - u1 u4' combination
        for _ in range(200):
            u = rng.normal(size=4)
            du = rng.normal(size=4)
            v = np.array([-u[3], u[0], u[1], u[2]])
            V = np.array([-du[3], du[0], du[1], du[2]])
            classical = u[3] * du[0] - u[2] * du[1] + u[1] * du[2] - u[0] * du[3]
            assert abs(bilinear_invariant(v, V, ks1.c) - classical) <= 1e-13 * max(1.0, abs(classical))

    def test_quaternion_cross_form(self, rng):
        for _ in range(200):
            c = rand_unit_vector(rng)
            v, V = rng.normal(size=4), rng.normal(size=4)
            jq = oracle_qcross(oracle_qconj(v), oracle_qconj(V))
            assert abs(bilinear_invariant(v, V, c) - jq[1:] @ c) <= 1e-13


class TestSKSMomenta:
    def test_circular_orbit(self, ks3):
        # x = e1, X = e2: (x cross X).c = 1, so V0 = -sqrt(2)
        V = sks_momenta(E1, E2, ks3)
        assert abs(V[0] + np.sqrt(2.0)) < 1e-14

    def test_vanishing_projection(self, ks3):
        # orbit plane containing c: angular momentum orthogonal to c
        x = np.array([0.0, 0.3, 0.8])
        X = np.array([0.0, -0.5, 0.9])
        V = sks_momenta(x, X, ks3)
        assert abs(V[0]) < 1e-14

    def test_radial_momentum(self, ks3):
        x = np.array([0.4, 0.2, 0.7])
        X = 1.7 * x  # radial: x cross X = 0
        V = sks_momenta(x, X, ks3)
        r = np.linalg.norm(x)
        expected_dir = r * X + (x @ X) * ks3.c
        assert np.allclose(np.cross(V[1:], expected_dir), np.zeros(3), atol=1e-12)

    def test_consistency_with_general_route(self, rng):
        for _ in range(300):
            chart = rand_chart(rng)
            x = rng.normal(size=3) * 2.0
            X = rng.normal(size=3)
            if 1.0 + (chart.c @ x) / np.linalg.norm(x) < 1e-6:
                continue
            sign = rng.choice([-1.0, 1.0])
            V1 = sks_momenta(x, X, chart, sign)
            V2 = cartesian_to_momenta(ks_invert_sks(x, chart, sign), X, chart)
            assert np.allclose(V1, V2, rtol=1e-11, atol=1e-13)

    def test_pole_and_collision(self, ks3):
        with pytest.raises(PoleError):
            sks_momenta(-E3, E1, ks3)
        with pytest.raises(CollisionError):
            sks_momenta(np.zeros(3), E1, ks3)


class TestMathieuPairing:
    def test_x_dx_equals_v_dv(self, rng):
        # X.dx = V.dv for arbitrary dv, with dx from finite differences
        for _ in range(100):
            chart = rand_chart(rng)
            v = rng.normal(size=4)
            if v @ v < 0.1:
                continue
            X = rng.normal(size=3)
            V = cartesian_to_momenta(v, X, chart)
            dv = rng.normal(size=4)
            eps = 1e-6
            dx = (ks_forward(v + eps * dv, chart) - ks_forward(v - eps * dv, chart)) / (2 * eps)
            scale = max(1.0, abs(V @ dv))
            assert abs(X @ dx - V @ dv) <= 1e-8 * scale


class TestQuadraticIdentities:
    def test_momentum_square(self, rng):
        # X.X = alpha/(4r) V.V - (J.c)^2/(4 r^2), X0^2 correction included
        for _ in range(1000):
            chart = rand_chart(rng)
            v = rng.normal(size=4)
            V = rng.normal(size=4)
            if v @ v < 0.1:
                continue
            r = (v @ v) / chart.alpha
            X, _ = momenta_to_cartesian(v, V, chart)
            jc = bilinear_invariant(v, V, chart.c)
            rhs = chart.alpha / (4 * r) * (V @ V) - jc**2 / (4 * r * r)
            assert abs(X @ X - rhs) <= 1e-12 * max(1.0, abs(rhs))

    def test_radial_product(self, rng):
        # x.X = v.V / 2
        for _ in range(1000):
            chart = rand_chart(rng)
            v = rng.normal(size=4)
            V = rng.normal(size=4)
            if v @ v < 0.1:
                continue
            x = ks_forward(v, chart)
            X, _ = momenta_to_cartesian(v, V, chart)
            assert abs(x @ X - (v @ V) / 2) <= 1e-12 * max(1.0, abs(v @ V) / 2)


class TestReduceMomenta:
    def test_identity_gauge(self, rng):
        V = rng.normal(size=4)
        assert np.array_equal(reduce_momenta_sks(V, IDENTITY, 1.0), V)

    def test_cartesian_image_preserved(self, rng):
        for _ in range(200):
            chart = rand_chart(rng)
            phase, state = rand_constrained_phase(rng, chart)
            vs, gauge, sign = reduce_to_sks(phase.v, chart.c)
            Vs = reduce_momenta_sks(phase.V, gauge, sign)
            X1, _ = momenta_to_cartesian(phase.v, phase.V, chart)
            X2, _ = momenta_to_cartesian(vs, Vs, chart)
            assert np.allclose(X1, X2, rtol=1e-11, atol=1e-12)
            assert np.allclose(ks_forward(vs, chart), ks_forward(phase.v, chart), rtol=1e-11, atol=1e-12)

    def test_constraint_preserved(self, rng):
        for _ in range(200):
            chart = rand_chart(rng)
            phase, _ = rand_constrained_phase(rng, chart)
            vs, gauge, sign = reduce_to_sks(phase.v, chart.c)
            Vs = reduce_momenta_sks(phase.V, gauge, sign)
            assert abs(bilinear_invariant(vs, Vs, chart.c)) <= 1e-12


class TestPhaseValidation:
    def test_accepts_constructed(self, rng, ks3):
        phase, _ = rand_constrained_phase(rng, ks3)
        validate_phase(phase, ks3)

    def test_rejects_violation(self, rng, ks3):
        phase, _ = rand_constrained_phase(rng, ks3)
        bad = KSPhase(phase.v, phase.V + np.array([0.0, 0.1, 0.0, 0.0]) * 10, 0.0, phase.V_star)
        if abs(bilinear_invariant(bad.v, bad.V, ks3.c)) > 1e-6:
            with pytest.raises(ConstraintViolation):
                validate_phase(bad, ks3)

    def test_projection_repairs(self, rng, ks3):
        phase, state = rand_constrained_phase(rng, ks3)
        bad = KSPhase(phase.v, phase.V + rng.normal(size=4) * 0.01, 0.0, phase.V_star)
        x_before = ks_forward(bad.v, ks3)
        X_before, _ = momenta_to_cartesian(bad.v, bad.V, ks3)
        fixed = project_constraint(bad, ks3)
        assert abs(bilinear_invariant(fixed.v, fixed.V, ks3.c)) <= 1e-13
        X_after, _ = momenta_to_cartesian(fixed.v, fixed.V, ks3)
        assert np.allclose(X_after, X_before, atol=1e-12)
        assert np.allclose(ks_forward(fixed.v, ks3), x_before, atol=1e-15)


class TestStateLift:
    @pytest.mark.parametrize("rep", ["sks", "rule1"])
    def test_round_trip(self, rng, rep):
        for _ in range(100):
            chart = rand_chart(rng)
            state = rand_bound_state(rng)
            phase = phase_from_cartesian(state, chart, rep=rep)
            back = cartesian_from_phase(phase, chart, state.mu)
            assert np.allclose(back.x, state.x, rtol=1e-11, atol=1e-12)
            assert np.allclose(back.X, state.X, rtol=1e-11, atol=1e-12)

    def test_vstar_is_minus_energy(self, rng, ks3):
        state = rand_bound_state(rng, mu=1.0)
        phase = phase_from_cartesian(state, ks3)
        energy = 0.5 * state.X @ state.X - state.mu / state.r
        assert abs(phase.V_star + energy) < 1e-12

    def test_unknown_rep(self, ks3):
        with pytest.raises(ValueError):
            phase_from_cartesian(CartesianState(E1, E2, 1.0), ks3, rep="bogus")
