import numpy as np
import pytest

from swsg.diagnostics import fit_loglog_slope
from swsg.dynamics import (
    RunResult,
    SimulationState,
    StepperKind,
    reconstruct_physical_positions,
    rotate,
    run,
    step,
    velocity_field,
)
from swsg.geometry import DiscreteMeasure, Domain, Grid, remap_periodic
from swsg.saddle import SolverError
from swsg.scenarios import initial_sigma, scenario_height_fn
from swsg.sinkhorn import PhysicalParams, SolverConfig

DOM = Domain()
PAR = PhysicalParams()


def const_field(v):
    v = np.asarray(v, dtype=float)

    def fn(points, weights, init):
        return np.broadcast_to(v, points.shape).copy(), None, []
    return fn


def spin_field(omega=1.0, center=(0.5, 0.5)):
    """Rigid rotation about an interior center; exact flow is a rotation."""
    c = np.asarray(center, dtype=float)

    def fn(points, weights, init):
        return omega * rotate(points - c), None, []
    return fn


def spin_exact(y0, t, omega=1.0, center=(0.5, 0.5)):
    c = np.asarray(center, dtype=float)
    d = y0 - c
    # d' = omega * J d with J(a,b) = (b,-a) rotates clockwise
    ct, st = np.cos(omega * t), np.sin(omega * t)
    return c + np.column_stack([ct * d[:, 0] + st * d[:, 1],
                                -st * d[:, 0] + ct * d[:, 1]])


class TestRotate:
    def test_convention(self):
        assert np.allclose(rotate(np.array([1.0, 0.0])), [0.0, -1.0])
        assert np.allclose(rotate(np.array([0.0, 1.0])), [1.0, 0.0])

    def test_is_isometry(self):
        rng = np.random.default_rng(0)
        v = rng.standard_normal((10, 2))
        assert np.allclose(np.sum(rotate(v)**2, -1), np.sum(v**2, -1))


class TestStepper:
    def test_validation(self):
        with pytest.raises(ValueError):
            StepperKind(name="ab2")
        with pytest.raises(ValueError):
            StepperKind(dt=0.0)

    @pytest.mark.parametrize("name", ["euler", "heun", "rk4"])
    def test_constant_field_exact(self, name):
        y0 = np.array([[0.2, 0.3], [0.6, 0.4]])
        st = SimulationState(t=0.0, particles=DiscreteMeasure(y0, np.array([0.5, 0.5])))
        v = np.array([0.3, -0.1])
        new, v1, _, _ = step(st, StepperKind(name, dt=0.1),
                             velocity_fn=const_field(v))
        assert np.allclose(new.particles.points, y0 + 0.1 * v, atol=1e-15)
        assert np.allclose(v1, v)
        assert new.t == pytest.approx(0.1)
        assert new.step_index == 1

    def test_weights_conserved_bitwise(self):
        w = np.array([0.25, 0.5, 0.125])
        y0 = np.array([[0.1, 0.2], [0.5, 0.5], [0.9, 0.8]])
        st = SimulationState(t=0.0, particles=DiscreteMeasure(y0, w))
        new, _, _, _ = step(st, StepperKind("rk4", dt=0.05),
                            velocity_fn=spin_field())
        assert new.particles.weights is w or np.array_equal(new.particles.weights, w)

    @pytest.mark.parametrize("name,order", [("euler", 1), ("heun", 2), ("rk4", 4)])
    def test_convergence_order_on_rotation(self, name, order):
        rng = np.random.default_rng(3)
        # radius <= 0.3 about (0.5, 0.5): the orbit never crosses the seam
        ang = rng.uniform(0, 2 * np.pi, 12)
        rad = rng.uniform(0.05, 0.3, 12)
        y0 = 0.5 + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        w = np.full(12, 1.0 / 12)
        T = 1.0
        exact = spin_exact(y0, T)
        errs, dts = [], [0.1, 0.05, 0.025]
        for dt in dts:
            st = SimulationState(t=0.0, particles=DiscreteMeasure(y0, w))
            for _ in range(int(round(T / dt))):
                st, _, _, _ = step(st, StepperKind(name, dt=dt),
                                   velocity_fn=spin_field())
            errs.append(np.max(np.abs(st.particles.points - exact)))
        slope = fit_loglog_slope(dts, errs)
        assert abs(slope - order) < 0.3

    def test_solver_error_carries_time_context(self):
        def bad(points, weights, init):
            raise SolverError("boom")
        st = SimulationState(t=1.5, particles=DiscreteMeasure(
            np.array([[0.5, 0.5]]), np.array([1.0])), step_index=15)
        with pytest.raises(SolverError, match="step 15 .*t=1.5"):
            step(st, StepperKind("euler", dt=0.1), velocity_fn=bad)


class TestRun:
    def test_zero_horizon_single_snapshot(self):
        sg = DiscreteMeasure(np.array([[0.3, 0.3]]), np.array([1.0]))
        res = run(sg, StepperKind("euler", dt=0.1), 0.0,
                  velocity_fn=const_field([0.1, 0.0]))
        assert res.completed
        assert len(res.snapshots) == 1
        assert res.snapshots[0].t == 0.0

    def test_snapshot_cadence_and_endpoints(self):
        sg = DiscreteMeasure(np.array([[0.3, 0.3]]), np.array([1.0]))
        res = run(sg, StepperKind("euler", dt=0.1), 1.0,
                  snapshot_every=0.25, velocity_fn=const_field([0.0, 0.0]))
        # cadence rounds to every 2-3 steps; t=0 and t=1 always present
        ts = [s.t for s in res.snapshots]
        assert ts[0] == 0.0
        assert ts[-1] == pytest.approx(1.0)
        assert len(res.step_log) == 10

    def test_zero_velocity_keeps_particles(self):
        y0 = np.array([[0.2, 0.7], [0.8, 0.1]])
        sg = DiscreteMeasure(y0, np.array([0.5, 0.5]))
        res = run(sg, StepperKind("heun", dt=0.2), 1.0,
                  velocity_fn=const_field([0.0, 0.0]))
        assert np.array_equal(res.snapshots[-1].points, y0)

    def test_failed_step_truncates_but_keeps_snapshots(self):
        calls = {"n": 0}

        def flaky(points, weights, init):
            calls["n"] += 1
            if calls["n"] > 3:
                raise SolverError("diverged")
            return np.zeros_like(points), None, []

        sg = DiscreteMeasure(np.array([[0.5, 0.5]]), np.array([1.0]))
        res = run(sg, StepperKind("euler", dt=0.1), 1.0, velocity_fn=flaky)
        assert not res.completed
        assert "diverged" in res.error
        assert len(res.snapshots) >= 1
        assert len(res.step_log) == 3

    def test_periodic_wraparound(self):
        sg = DiscreteMeasure(np.array([[0.95, 0.5]]), np.array([1.0]))
        res = run(sg, StepperKind("euler", dt=0.1), 1.0,
                  velocity_fn=const_field([0.3, 0.0]))
        x1 = res.snapshots[-1].points[0, 0]
        assert 0.0 <= x1 < 1.0
        assert x1 == pytest.approx((0.95 + 0.3) % 1.0, abs=1e-12)

    def test_negative_horizon_raises(self):
        sg = DiscreteMeasure(np.array([[0.5, 0.5]]), np.array([1.0]))
        with pytest.raises(ValueError):
            run(sg, StepperKind(), -1.0, velocity_fn=const_field([0, 0]))


class TestVelocityField:
    def small_setup(self, n=8, eps=0.1):
        grid = Grid(n, n)
        gm = grid.measure()
        fn = scenario_height_fn("jet")
        sg = initial_sigma(grid, fn, PAR)
        return gm, sg, SolverConfig(eps=eps, tol=1e-11)

    def test_jet_velocity_is_zonal(self):
        gm, sg, cfg = self.small_setup()
        v, pots, stats = velocity_field(sg.points, sg.weights, gm, PAR, cfg)
        # stationary shear flow: x2 velocity vanishes, flow is eastward where
        # the height gradient is positive
        assert np.max(np.abs(v[:, 1])) < 1e-10
        mid = np.argmin(np.abs(sg.points[:, 1] - sg.points[:, 1].mean()))
        assert v[mid, 0] > 0

    def test_translation_equivariance_in_x1(self):
        gm, sg, cfg = self.small_setup()
        # shift by a whole number of grid cells so the discrete grid measure
        # is itself invariant
        shift = np.array([3.0 / 8.0, 0.0])
        pts2 = remap_periodic(sg.points + shift, DOM)
        v1, _, _ = velocity_field(sg.points, sg.weights, gm, PAR, cfg)
        v2, _, _ = velocity_field(pts2, sg.weights, gm, PAR, cfg)
        assert np.max(np.abs(v1 - v2)) < 1e-9

    def test_warm_start_cheaper_than_cold(self):
        gm, sg, cfg = self.small_setup()
        v, pots, stats_cold = velocity_field(sg.points, sg.weights, gm, PAR, cfg)
        _, _, stats_warm = velocity_field(sg.points, sg.weights, gm, PAR, cfg,
                                          init=pots)
        assert sum(s.iterations for s in stats_warm) < \
            sum(s.iterations for s in stats_cold)

    def test_biased_and_debiased_modes_run(self):
        gm, sg, cfg = self.small_setup(n=6)
        vd, pd, _ = velocity_field(sg.points, sg.weights, gm, PAR, cfg,
                                   debiased=True)
        vb, pb, _ = velocity_field(sg.points, sg.weights, gm, PAR, cfg,
                                   debiased=False)
        assert pd.psi_sym is not None
        assert pb.psi_sym is None
        assert vd.shape == vb.shape == sg.points.shape

    def test_nonconvergence_raises(self):
        gm, sg, cfg = self.small_setup()
        tight = SolverConfig(eps=cfg.eps, tol=1e-14, max_iters=2)
        with pytest.raises(SolverError):
            velocity_field(sg.points, sg.weights, gm, PAR, tight)


class TestReconstruction:
    def test_one_point_biased_recovers_grid_point(self):
        gm = DiscreteMeasure(np.array([[0.25, 0.4]]), np.array([1.0]))
        sg = DiscreteMeasure(np.array([[0.25, 0.7]]), np.array([1.0]))
        _, pots, _ = velocity_field(sg.points, sg.weights, gm, PAR,
                                    SolverConfig(eps=0.05), debiased=False)
        rec = reconstruct_physical_positions(pots, gm, sg, 0.05, debiased=False)
        assert np.allclose(rec.points[0], [0.25, 0.4], atol=1e-10)

    def test_debiased_requires_psi_sym(self):
        gm = DiscreteMeasure(np.array([[0.25, 0.4]]), np.array([1.0]))
        sg = DiscreteMeasure(np.array([[0.25, 0.7]]), np.array([1.0]))
        _, pots, _ = velocity_field(sg.points, sg.weights, gm, PAR,
                                    SolverConfig(eps=0.05), debiased=False)
        with pytest.raises(ValueError):
            reconstruct_physical_positions(pots, gm, sg, 0.05, debiased=True)

    def test_jet_reconstruction_near_hoskins_preimage(self):
        grid = Grid(12, 12)
        gm = grid.measure()
        fn = scenario_height_fn("jet")
        sg = initial_sigma(grid, fn, PAR)
        _, pots, _ = velocity_field(sg.points, sg.weights, gm, PAR,
                                    SolverConfig(eps=0.05))
        rec = reconstruct_physical_positions(pots, gm, sg, 0.05)
        # debiased physical positions land near the generating grid nodes
        d = np.abs(rec.points - grid.points())
        d[:, 0] = np.minimum(d[:, 0], 1.0 - d[:, 0])
        assert np.max(d) < 0.05


def test_run_result_dataclass_defaults():
    r = RunResult(snapshots=[], completed=True)
    assert r.error is None and r.step_log == []
