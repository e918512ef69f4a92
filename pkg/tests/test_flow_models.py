"""Hamiltonian model catalog: values, symmetries, integrators, parsing."""

import math

import numpy as np
import pytest

from slowvol.errors import (
    ConfigError,
    ConstraintViolation,
    EnergyDriftExceeded,
    NonPositiveH,
    ZeroCovector,
)
from slowvol.flow_models import (
    FlatTorus,
    FlowConfig,
    Nil3,
    PhasePoint,
    RandersTorus2,
    RoundSphere2,
    Sol3,
    StarshapedTorus2,
    catalog_models,
    chart_distance,
    conjugation_residual,
    dilation,
    euler_residual,
    flow,
    flow_batch,
    gradient_fd_mismatch,
    hamiltonian,
    parse_model,
    write_trajectory_csv,
)

FULL_STAR = StarshapedTorus2(1.0, ((1, 0, 0, 0.2, 0.0), (0, 1, 2, 0.15, 0.5)))


def _sample_point(model):
    """A generic off-axis phase point valid for the given model."""
    if isinstance(model, RoundSphere2):
        q = (0.0, 0.0, 1.0)
        p = (0.6, -0.8, 0.0)
    elif model.chart_dim == 3:
        q = (0.1, -0.2, 0.05)
        p = (0.6, -0.3, 0.45)
    else:
        q = (0.1, 0.2)
        p = (0.7, -0.4)
    return PhasePoint(q, p)


class TestHamiltonianValues:
    def test_flat_identity_metric(self):
        assert hamiltonian(FlatTorus(2), PhasePoint((0, 0), (3, 4))) == 25.0

    def test_flat_diagonal_metric(self):
        m = FlatTorus(2, ((2, 0), (0, 1)))
        assert hamiltonian(m, PhasePoint((0, 0), (3, 4))) == 34.0

    def test_nil3_value(self):
        assert hamiltonian(Nil3(), PhasePoint((1, 0, 0), (1, 1, 1))) == 6.0

    def test_zero_covector_allowed_where_smooth(self):
        assert hamiltonian(FlatTorus(2), PhasePoint((0.3, 0.4), (0, 0))) == 0.0

    def test_dilation_scales_h_quadratically(self):
        for model in catalog_models():
            x = _sample_point(model)
            h1 = hamiltonian(model, x)
            h2 = hamiltonian(model, dilation(x, 3.0))
            assert h2 == pytest.approx(9.0 * h1, rel=1e-12)

    def test_euler_identity_and_gradients(self):
        for model in catalog_models():
            x = _sample_point(model)
            assert abs(euler_residual(model, x)) <= 1e-10
            assert gradient_fd_mismatch(model, x) <= 1e-5

    def test_euler_rejects_zero_covector(self):
        with pytest.raises(ZeroCovector):
            euler_residual(FlatTorus(2), PhasePoint((0.0, 0.0), (0.0, 0.0)))


class TestExactFlows:
    def test_flat_geodesic(self):
        y = flow(
            FlatTorus(2),
            PhasePoint((0, 0), (1, 0)),
            0.25,
            FlowConfig(integrator="exact"),
        )
        assert y.q == pytest.approx((0.5, 0.0), abs=1e-15)
        assert y.p == (1.0, 0.0)

    def test_sphere_closed_orbit(self):
        # unit covector: speed 2, great circle length 2 pi, period pi
        sph = RoundSphere2()
        x = PhasePoint((0.0, 0.0, 1.0), (1.0, 0.0, 0.0))
        cfg = FlowConfig(integrator="exact")
        for k in (1, 2, 3):
            y = flow(sph, x, k * math.pi, cfg)
            assert chart_distance(sph, y, x) <= 1e-12

    def test_sphere_constraints_preserved_by_midpoint(self):
        sph = RoundSphere2()
        x = PhasePoint((0.0, 0.0, 1.0), (1.0, 0.0, 0.0))
        y = flow(sph, x, math.pi, FlowConfig(step=1e-3))
        q = np.array(y.q)
        p = np.array(y.p)
        assert abs(q @ q - 1.0) <= 1e-12
        assert abs(q @ p) <= 1e-12
        assert chart_distance(sph, y, x) <= 1e-4

    def test_exact_unavailable_raises(self):
        with pytest.raises(ConfigError):
            flow(
                Sol3(),
                PhasePoint((0, 0, 0), (1, 1, 1)),
                1.0,
                FlowConfig(integrator="exact"),
            )

    def test_randers_flow_is_linear(self):
        rnd = RandersTorus2((0.3, 0.0))
        x = PhasePoint((0.0, 0.0), (1.0, 0.0))
        # f = |p| + b.p = 1.3, v = 2 f (p/|p| + b) = 2.6 * (1.3, 0)
        y = flow(rnd, x, 0.1, FlowConfig(integrator="exact"))
        assert y.q[0] == pytest.approx(0.1 * 2.6 * 1.3 - round(0.1 * 2.6 * 1.3))
        assert y.p == (1.0, 0.0)


class TestIntegrators:
    def test_midpoint_converges_at_second_order(self):
        nil = Nil3()
        x = PhasePoint((0.1, -0.2, 0.05), (0.6, -0.3, 0.45))
        ref = flow(nil, x, 1.0, FlowConfig(integrator="exact"))
        errs = [
            chart_distance(nil, flow(nil, x, 1.0, FlowConfig(step=s)), ref)
            for s in (2e-2, 1e-2)
        ]
        assert errs[0] == pytest.approx(8.216275e-05, rel=1e-3)
        assert 3.6 <= errs[0] / errs[1] <= 4.4

    def test_rk4_matches_exact(self):
        nil = Nil3()
        x = PhasePoint((0.1, -0.2, 0.05), (0.6, -0.3, 0.45))
        ref = flow(nil, x, 1.0, FlowConfig(integrator="exact"))
        y = flow(nil, x, 1.0, FlowConfig(step=1e-3, integrator="rk4"))
        assert chart_distance(nil, y, ref) <= 1e-10

    def test_midpoint_energy_conservation_long_run(self):
        nil = Nil3()
        Q = np.array([[0.1, -0.2, 0.05]])
        P = np.array([[0.6, -0.3, 0.45]])
        h0 = nil.h_batch(Q, P)[0]
        Q2, P2 = flow_batch(nil, Q, P, 0.0, 16.0, FlowConfig(step=1e-3))
        assert abs(nil.h_batch(Q2, P2)[0] - h0) <= 1e-10

    def test_batch_equals_single_rows_bitwise(self):
        # rows pick different halving depths under a tight drift cap, yet
        # the batch result must not depend on which rows share a call
        rng = np.random.default_rng(7)
        thetas = 2.0 * math.pi * rng.random(24)
        Q = np.full((24, 2), 0.25)
        P = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
        cfg = FlowConfig(step=1e-2, energy_drift_cap=1e-6)
        Qb, Pb = flow_batch(FULL_STAR, Q, P, 0.0, 0.5, cfg)
        for i in (0, 5, 9, 17, 23):
            q1, p1 = flow_batch(FULL_STAR, Q[i : i + 1], P[i : i + 1], 0.0, 0.5, cfg)
            assert np.array_equal(Qb[i], q1[0])
            assert np.array_equal(Pb[i], p1[0])

    def test_unreachable_drift_cap_raises(self):
        Q = np.full((4, 2), 0.25)
        P = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        cfg = FlowConfig(step=1e-2, energy_drift_cap=1e-30, max_step_halvings=2)
        with pytest.raises(EnergyDriftExceeded):
            flow_batch(FULL_STAR, Q, P, 0.0, 0.5, cfg)

    def test_zero_span_is_identity(self):
        Q = np.array([[0.1, 0.2]])
        P = np.array([[0.7, -0.4]])
        Q2, P2 = flow_batch(FlatTorus(2), Q, P, 2.0, 2.0)
        assert np.array_equal(Q, Q2) and np.array_equal(P, P2)
        assert Q2 is not Q  # fresh arrays even when nothing moves


class TestConjugationSymmetry:
    # flow(x, r t) vs dilation-conjugated flow: exact for degree-2 H,
    # so the residual is pure integrator error and shrinks at order 2

    NIL_POINT = PhasePoint((0.1, -0.2, 0.05), (0.6, -0.3, 0.45))

    def test_nil3_residual_ladder(self):
        nil = Nil3()
        frozen = {4e-4: 9.451235e-09, 2e-4: 2.362817e-09, 1e-4: 5.906941e-10}
        values = {}
        for step, expect in frozen.items():
            got = conjugation_residual(
                nil, self.NIL_POINT, 1.0, 0.5, FlowConfig(step=step)
            )
            assert got == pytest.approx(expect, rel=1e-3)
            values[step] = got
        assert 3.6 <= values[4e-4] / values[2e-4] <= 4.4
        assert 3.6 <= values[2e-4] / values[1e-4] <= 4.4

    def test_randers_residual_at_rounding_floor(self):
        # q-independent H flows linearly, the midpoint rule is exact on it,
        # so the residual sits at the accumulation floor near 1e-13
        rnd = RandersTorus2((0.3, 0.0))
        x = PhasePoint((0.1, 0.2), (0.7, -0.4))
        for step in (1e-3, 1e-4):
            assert conjugation_residual(rnd, x, 1.0, 0.5, FlowConfig(step=step)) <= 1e-6

    def test_exact_integrator_residual_is_zero(self):
        nil = Nil3()
        r = conjugation_residual(
            nil, self.NIL_POINT, 1.0, 0.5, FlowConfig(integrator="exact")
        )
        assert r <= 1e-13


class TestChartsAndValidation:
    def test_chart_distance_wraps_torus(self):
        m = FlatTorus(2)
        a = PhasePoint((0.05, 0.0), (1.0, 0.0))
        b = PhasePoint((0.95, 0.0), (1.0, 0.0))
        assert chart_distance(m, a, b) == pytest.approx(0.1)

    def test_chart_distance_no_wrap_off_torus(self):
        nil = Nil3()
        a = PhasePoint((0.05, 0, 0), (1, 0, 0))
        b = PhasePoint((0.95, 0, 0), (1, 0, 0))
        assert chart_distance(nil, a, b) == pytest.approx(0.9)

    def test_wrong_chart_dimension_rejected(self):
        with pytest.raises(ValueError):
            flow(Nil3(), PhasePoint((0.0, 0.0), (1.0, 0.0)), 1.0)

    def test_sphere_base_point_must_satisfy_constraints(self):
        sph = RoundSphere2()
        with pytest.raises(ConstraintViolation):
            hamiltonian(sph, PhasePoint((0.0, 0.0, 2.0), (1.0, 0.0, 0.0)))
        with pytest.raises(ConstraintViolation):
            hamiltonian(sph, PhasePoint((0.0, 0.0, 1.0), (1.0, 0.0, 0.5)))

    def test_mismatched_qp_lengths(self):
        with pytest.raises(ValueError):
            PhasePoint((0.0, 0.0), (1.0,))

    def test_dilation_requires_positive_factor(self):
        with pytest.raises(ValueError):
            dilation(PhasePoint((0.0,), (1.0,)), 0.0)


class TestModelConstruction:
    def test_star_profile_must_stay_positive(self):
        with pytest.raises(NonPositiveH):
            StarshapedTorus2(1.0, ((1, 0, 0, 1.5, 0.0),))

    def test_randers_drift_must_be_subunit(self):
        with pytest.raises(ValueError):
            RandersTorus2((0.8, 0.7))

    def test_flat_metric_must_be_positive_definite(self):
        with pytest.raises(ValueError):
            FlatTorus(2, ((1, 2), (2, 1)))

    def test_flat_metric_must_be_symmetric(self):
        with pytest.raises(ValueError):
            FlatTorus(2, ((1, 1), (0, 1)))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            FlowConfig(step=0.0)
        with pytest.raises(ValueError):
            FlowConfig(integrator="euler")
        with pytest.raises(ValueError):
            FlowConfig(energy_drift_cap=-1.0)


class TestParsing:
    def test_round_trip_whole_catalog(self):
        for model in catalog_models():
            again = parse_model(model.describe())
            assert again.describe() == model.describe()
            x = _sample_point(model)
            assert hamiltonian(again, x) == hamiltonian(model, x)

    def test_explicit_forms(self):
        m = parse_model("FlatTorus(2; 2 0; 0 1)")
        assert hamiltonian(m, PhasePoint((0, 0), (3, 4))) == 34.0
        r = parse_model("RandersTorus2(0.3, 0.0)")
        assert r.drift == (0.3, 0.0)

    def test_bad_strings_raise_config_error(self):
        for text in ("", "FlatTorus", "FlatTorus(x)", "Mobius(2)", "Sol3(3)"):
            with pytest.raises(ConfigError):
                parse_model(text)


class TestTrajectoryOutput:
    def test_csv_deterministic_and_wrapped(self, tmp_path):
        m = FlatTorus(2)
        x = PhasePoint((0.0, 0.0), (1.0, 0.25))
        times = [0.5, 1.0, 2.0]
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        cfg = FlowConfig(integrator="exact")
        write_trajectory_csv(a, m, x, times, cfg)
        write_trajectory_csv(b, m, x, times, cfg)
        assert a.read_bytes() == b.read_bytes()
        lines = a.read_text().strip().split("\n")
        assert lines[0] == "t,q1,q2,p1,p2"
        assert len(lines) == 4
        q1 = float(lines[-1].split(",")[1])
        assert -0.5 <= q1 <= 0.5  # torus chart stays wrapped

    def test_csv_times_must_increase(self, tmp_path):
        with pytest.raises(ValueError):
            write_trajectory_csv(
                tmp_path / "x.csv",
                FlatTorus(2),
                PhasePoint((0, 0), (1, 0)),
                [1.0, 1.0],
            )
