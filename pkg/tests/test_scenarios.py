import numpy as np
import pytest

from swsg.geometry import Domain, Grid
from swsg.scenarios import (
    BumpParams,
    JetParams,
    csp_check,
    hoskins_inverse_x2,
    initial_sigma,
    jet_height,
    perturbed_height,
    scenario_height_fn,
    scenario_measures,
)
from swsg.sinkhorn import PhysicalParams

PAR = PhysicalParams()
DOM = Domain()


class TestJetHeight:
    def test_center_values(self):
        h, grad = jet_height(np.array([[0.3, 0.5]]), JetParams())
        assert h[0] == pytest.approx(1.0)
        assert grad[0, 0] == 0.0
        assert grad[0, 1] == pytest.approx(1.0)  # a*b = 0.1*10

    def test_asymptotic_limit(self):
        h, _ = jet_height(np.array([[0.0, 100.0]]), JetParams())
        assert h[0] == pytest.approx(1.1)

    def test_shallow_slope(self):
        h, grad = jet_height(np.array([[0.0, 0.5]]), JetParams(b=5.0))
        assert grad[0, 1] == pytest.approx(0.5)

    def test_validation(self):
        with pytest.raises(ValueError):
            JetParams(a=1.5, d=1.0)


class TestPerturbedHeight:
    def test_bump_amplitude_at_center(self):
        jet, bump = JetParams(), BumpParams()
        h, _ = perturbed_height(np.array([[0.5, 0.3]]), jet, bump)
        hj, _ = jet_height(np.array([[0.5, 0.3]]), jet)
        assert h[0] - hj[0] == pytest.approx(0.001 / (2 * np.pi * 0.01), rel=1e-12)

    def test_far_from_bump_reduces_to_jet(self):
        jet, bump = JetParams(), BumpParams()
        p = np.array([[0.5, 0.95]])
        h, grad = perturbed_height(p, jet, bump)
        hj, gradj = jet_height(p, jet)
        assert abs(h[0] - hj[0]) < 1e-8
        assert np.max(np.abs(grad - gradj)) < 1e-6

    def test_bump_is_periodic_in_x1(self):
        jet, bump = JetParams(), BumpParams(mu1=0.02)
        a = perturbed_height(np.array([[0.98, 0.3]]), jet, bump)[0][0]
        b = perturbed_height(np.array([[0.06, 0.3]]), jet, bump)[0][0]
        hj = jet_height(np.array([[0.0, 0.3]]), jet)[0][0]
        # 0.98 is distance 0.04 from the bump center through the seam
        assert a - hj == pytest.approx(
            perturbed_height(np.array([[0.06, 0.3]]), jet, bump)[0][0] - hj,
            rel=1e-10)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        jet, bump = JetParams(), BumpParams()
        pts = rng.random((100, 2))
        _, grad = perturbed_height(pts, jet, bump)
        step = 1e-6
        for axis in (0, 1):
            dp = np.zeros(2)
            dp[axis] = step
            hp, _ = perturbed_height(pts + dp, jet, bump)
            hm, _ = perturbed_height(pts - dp, jet, bump)
            fd = (hp - hm) / (2 * step)
            denom = max(np.max(np.abs(grad[:, axis])), 1.0)
            assert np.max(np.abs(grad[:, axis] - fd)) / denom < 1e-6


class TestCsp:
    def test_paper_constants(self):
        assert csp_check(JetParams(a=0.1, b=10.0), PAR)
        assert csp_check(JetParams(a=0.1, b=5.0), PAR)
        assert not csp_check(JetParams(a=0.1, b=12.0), PAR)


class TestInitialSigma:
    def test_steep_jet_center_displacement(self):
        grid = Grid(8, 8)
        fn = scenario_height_fn("jet")
        sg = initial_sigma(grid, fn, PAR)
        # particle from a node at x2=0.5 would move to 0.6; check via a node
        # close to the center row
        X = grid.points()
        i = np.argmin(np.abs(X[:, 1] - 0.5))
        h, grad = fn(X[i:i + 1])
        assert sg.points[i, 1] == pytest.approx(X[i, 1] + 0.1 * grad[0, 1])

    def test_uniform_height_identity(self):
        grid = Grid(6, 6)
        d = 1.3

        def fn(pts):
            return np.full(len(pts), d), np.zeros_like(pts)

        sg = initial_sigma(grid, fn, PAR)
        assert np.allclose(sg.points, grid.points())
        assert np.allclose(sg.weights, d / grid.size)

    def test_total_mass_is_mean_height(self):
        grid = Grid(10, 10)
        fn = scenario_height_fn("jet")
        sg = initial_sigma(grid, fn, PAR)
        h, _ = fn(grid.points())
        assert float(sg.weights.sum()) == pytest.approx(float(h.mean()))

    def test_jet_rows_share_y2(self):
        grid = Grid(8, 8)
        _, sg = scenario_measures("jet", grid, PAR)
        y2 = sg.points[:, 1].reshape(8, 8)
        assert np.all(y2 == y2[:, :1])

    def test_perturbed_reduces_to_jet_linearly_in_alpha(self):
        grid = Grid(8, 8)
        _, sj = scenario_measures("jet", grid, PAR)
        devs = []
        for alpha in (1e-3, 1e-4):
            _, sp = scenario_measures("perturbed_jet", grid, PAR,
                                      bump=BumpParams(alpha=alpha))
            devs.append(np.max(np.abs(sp.points - sj.points)))
        assert devs[1] == pytest.approx(devs[0] / 10, rel=1e-3)

    def test_weights_positive(self):
        grid = Grid(8, 8)
        for name in ("jet", "shallow_jet", "perturbed_jet"):
            _, sg = scenario_measures(name, grid, PAR)
            assert np.all(sg.weights > 0)

    def test_csp_violation_warns(self):
        grid = Grid(4, 4)
        with pytest.warns(UserWarning):
            scenario_measures("jet", grid, PAR, jet=JetParams(a=0.1, b=12.0))

    def test_unknown_scenario(self):
        with pytest.raises(ValueError):
            scenario_height_fn("vortex")


class TestHoskinsInverse:
    def test_roundtrip(self):
        jet = JetParams()
        x2 = np.linspace(0.05, 0.95, 31)
        geff = PAR.g / PAR.f**2
        _, grad = jet_height(np.column_stack([np.zeros_like(x2), x2]), jet)
        y2 = x2 + geff * grad[:, 1]
        back = hoskins_inverse_x2(y2, jet, PAR)
        assert np.max(np.abs(back - x2)) < 1e-10
