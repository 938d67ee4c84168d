import numpy as np
import pytest

from swsg.diagnostics import (
    GridField,
    ageostrophic_ratio,
    cloud_error,
    debiased_height,
    energy_report,
    fit_loglog_slope,
    height_error,
    interpolate_to_grid,
    l2_height_error,
    phase_space_error,
    weighted_l2,
)
from swsg.geometry import DiscreteMeasure, Domain, Grid
from swsg.scenarios import initial_sigma, scenario_height_fn
from swsg.sinkhorn import PhysicalParams

DOM = Domain()
PAR = PhysicalParams()


class TestGridField:
    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            GridField(np.ones(5), Grid(2, 3))

    def test_nonfinite(self):
        with pytest.raises(ValueError):
            GridField(np.array([1.0, np.nan] + [1.0] * 4), Grid(2, 3))


class TestEnergy:
    def test_rest_state_energies(self):
        grid = Grid(8, 8)
        gm = grid.measure()
        h = np.ones(grid.size)
        rep = energy_report(h, gm, gm, PAR, eps=0.05)
        # motionless uniform state: no kinetic energy, potential (g/2) h^2 = 0.05
        assert abs(rep.kinetic) < 1e-8
        assert rep.potential == pytest.approx(0.05)
        assert rep.normalized_error == 0.0

    def test_normalized_drift_sign_and_scale(self):
        grid = Grid(8, 8)
        gm = grid.measure()
        fn = scenario_height_fn("jet")
        sg = initial_sigma(grid, fn, PAR)
        h = fn(grid.points())[0]
        base = energy_report(h, gm, sg, PAR, eps=0.05)
        again = energy_report(h, gm, sg, PAR, eps=0.05, baseline=base)
        assert again.normalized_error == pytest.approx(0.0, abs=1e-12)
        assert base.total == pytest.approx(again.total)

    def test_biased_kinetic_exceeds_debiased(self):
        # OT_eps carries the entropic self-transport bias that the divergence
        # subtracts off
        grid = Grid(8, 8)
        gm = grid.measure()
        fn = scenario_height_fn("jet")
        sg = initial_sigma(grid, fn, PAR)
        h = fn(grid.points())[0]
        deb = energy_report(h, gm, sg, PAR, eps=0.05, debiased=True)
        bia = energy_report(h, gm, sg, PAR, eps=0.05, debiased=False)
        assert bia.kinetic > deb.kinetic


class TestDebiasedHeight:
    def test_one_point_unit_height(self):
        gm = DiscreteMeasure(np.array([[0.3, 0.4]]), np.array([1.0]))
        sg = DiscreteMeasure(np.array([[0.3, 0.7]]), np.array([1.0]))
        h = debiased_height(gm, sg, PAR, eps=0.05)
        assert h[0] == pytest.approx(1.0, abs=1e-8)

    def test_two_height_formulas_agree(self):
        rng = np.random.default_rng(2)
        gm = DiscreteMeasure(rng.random((12, 2)), np.full(12, 1.0 / 12))
        sg = DiscreteMeasure(rng.random((12, 2)), rng.uniform(0.9, 1.1, 12) / 12)
        ha = debiased_height(gm, sg, PAR, eps=0.1, tol=1e-12)
        hb = debiased_height(gm, sg, PAR, eps=0.1, tol=1e-12,
                             from_potentials=True)
        assert np.max(np.abs(ha - hb)) < 1e-8

    def test_jet_height_close_to_analytic(self):
        grid = Grid(12, 12)
        gm = grid.measure()
        fn = scenario_height_fn("jet")
        sg = initial_sigma(grid, fn, PAR)
        h = debiased_height(gm, sg, PAR, eps=0.05)
        href = fn(grid.points())[0]
        assert np.max(np.abs(h - href)) < 0.05


class TestAgeostrophicRatio:
    def test_exact_geostrophic_translation_is_zero(self):
        rng = np.random.default_rng(5)
        pts = rng.random((20, 2))
        w = np.full(20, 0.05)
        vg = np.tile([0.3, -0.1], (20, 1))
        dt = 0.1
        ratio = ageostrophic_ratio(pts - dt * vg, pts + dt * vg, vg, w, dt)
        assert ratio < 1e-12

    def test_known_perturbation_ratio(self):
        pts = np.tile([0.5, 0.5], (4, 1))
        w = np.full(4, 0.25)
        vg = np.tile([1.0, 0.0], (4, 1))
        extra = np.tile([0.0, 0.1], (4, 1))
        dt = 0.05
        v = vg + extra
        ratio = ageostrophic_ratio(pts - dt * v, pts + dt * v, vg, w, dt)
        assert ratio == pytest.approx(0.1, rel=1e-10)

    def test_seam_crossing_displacement(self):
        pts_prev = np.array([[0.98, 0.5]])
        pts_next = np.array([[0.02, 0.5]])
        vg = np.array([[0.2, 0.0]])
        w = np.array([1.0])
        # true displacement is +0.04 through the seam over 2*dt = 0.2
        ratio = ageostrophic_ratio(pts_prev, pts_next, vg, w, 0.1)
        assert ratio == pytest.approx(0.0, abs=1e-12)

    def test_validation(self):
        pts = np.zeros((2, 2))
        w = np.ones(2)
        with pytest.raises(ValueError):
            ageostrophic_ratio(pts, pts, np.ones((2, 2)), w, 0.0)
        with pytest.raises(ValueError):
            ageostrophic_ratio(pts, pts, np.zeros((2, 2)), w, 0.1)


class TestHeightError:
    def test_zero_on_identical(self):
        grid = Grid(8, 8)
        h = 1.0 + 0.1 * np.sin(2 * np.pi * grid.points()[:, 0])
        f = GridField(h, grid)
        assert height_error(f, f) < 1e-4
        assert l2_height_error(f, f) == pytest.approx(0.0, abs=1e-12)

    def test_positive_and_ordered(self):
        grid = Grid(8, 8)
        base = np.ones(grid.size)
        x2 = grid.points()[:, 1]
        small = GridField(base + 0.05 * x2, grid)
        large = GridField(base + 0.2 * x2, grid)
        ref = GridField(base, grid)
        es, el = height_error(small, ref), height_error(large, ref)
        assert 0 < es < el
        assert l2_height_error(small, ref) < l2_height_error(large, ref)

    def test_negative_values_warn_and_clamp(self):
        grid = Grid(4, 4)
        h = np.ones(grid.size)
        h[0] = -0.01
        with pytest.warns(UserWarning):
            height_error(GridField(h, grid), GridField(np.ones(grid.size), grid))


class TestInterpolation:
    def test_restriction_of_smooth_field(self):
        fine, coarse = Grid(64, 64), Grid(16, 16)
        f = lambda p: np.sin(2 * np.pi * p[:, 0]) + p[:, 1]**2
        vals = interpolate_to_grid(GridField(f(fine.points()), fine), coarse)
        assert np.max(np.abs(vals - f(coarse.points()))) < 2e-3

    def test_periodic_seam(self):
        fine, coarse = Grid(64, 4), Grid(32, 4)
        f = lambda p: np.cos(2 * np.pi * p[:, 0])
        vals = interpolate_to_grid(GridField(f(fine.points()), fine), coarse)
        # coarse nodes near the seam interpolate through the wrapped column
        assert np.max(np.abs(vals - f(coarse.points()))) < 5e-3


class TestCloudErrors:
    def test_phase_space_zero_on_identical(self):
        rng = np.random.default_rng(8)
        pos = rng.random((10, 2))
        vel = 0.1 * rng.standard_normal((10, 2))
        w = np.full(10, 0.1)
        assert phase_space_error(pos, vel, w, pos, vel, w) < 1e-4

    def test_phase_space_grows_with_velocity_offset(self):
        rng = np.random.default_rng(9)
        pos = rng.random((10, 2))
        vel = np.zeros((10, 2))
        w = np.full(10, 0.1)
        e1 = phase_space_error(pos, vel + [0.1, 0.0], w, pos, vel, w)
        e2 = phase_space_error(pos, vel + [0.4, 0.0], w, pos, vel, w)
        assert 0 < e1 < e2

    def test_cloud_error_mass_normalized(self):
        rng = np.random.default_rng(10)
        a = DiscreteMeasure(rng.random((8, 2)), np.full(8, 1.0))
        b = DiscreteMeasure(a.points, np.full(8, 0.25))
        # same points, different total mass: normalization makes them equal
        assert cloud_error(a, b) < 1e-4


class TestFitting:
    def test_exact_power_law(self):
        xs = [0.1, 0.05, 0.025]
        ys = [3.0 * x**1.7 for x in xs]
        assert fit_loglog_slope(xs, ys) == pytest.approx(1.7, abs=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            fit_loglog_slope([0.1, 0.0], [1.0, 2.0])

    def test_weighted_l2(self):
        v = np.array([[3.0, 4.0], [0.0, 0.0]])
        w = np.array([1.0, 5.0])
        assert weighted_l2(v, w) == pytest.approx(5.0)
