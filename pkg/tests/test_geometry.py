import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swsg.geometry import (
    DiscreteMeasure,
    Domain,
    Grid,
    cost_matrix,
    nearest_image_x1,
    periodic_cost,
    remap_periodic,
    total_mass,
)

finite = st.floats(-50.0, 50.0, allow_nan=False)


def test_domain_validation():
    with pytest.raises(ValueError):
        Domain(x1_period=0.0)
    with pytest.raises(ValueError):
        Domain(x2_min=1.0, x2_max=0.0)


def test_measure_validation():
    with pytest.raises(ValueError):
        DiscreteMeasure(np.zeros((3, 3)), np.ones(3))
    with pytest.raises(ValueError):
        DiscreteMeasure(np.zeros((3, 2)), np.ones(2))
    with pytest.raises(ValueError):
        DiscreteMeasure(np.zeros((2, 2)), np.array([1.0, -0.1]))
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([[np.nan, 0.0]]), np.array([1.0]))


def test_grid_layout():
    g = Grid(4, 3)
    pts = g.points()
    assert pts.shape == (12, 2)
    # node k = j*n1 + i, x1 fastest
    assert pts[0, 0] == pytest.approx(0.125)
    assert pts[1, 0] == pytest.approx(0.375)
    assert pts[0, 1] == pytest.approx(1.0 / 6.0)
    assert pts[4, 1] == pytest.approx(0.5)
    m = g.measure()
    assert total_mass(m) == pytest.approx(1.0)
    assert np.all(m.weights == 1.0 / 12.0)


def test_grid_cell_centers_avoid_boundary():
    g = Grid(8, 8)
    pts = g.points()
    assert pts[:, 0].min() > 0 and pts[:, 0].max() < 1
    assert pts[:, 1].min() > 0 and pts[:, 1].max() < 1


def test_periodic_cost_wraps_shortest_image():
    d = Domain()
    # distance across the seam: 0.95 to 0.05 is 0.1, not 0.9
    c = periodic_cost(np.array([0.95, 0.5]), np.array([0.05, 0.5]), d)
    assert c == pytest.approx(0.1**2)
    # x2 never wraps
    c = periodic_cost(np.array([0.5, 0.05]), np.array([0.5, 0.95]), d)
    assert c == pytest.approx(0.9**2)


def test_cost_matrix_matches_pointwise():
    rng = np.random.default_rng(0)
    d = Domain()
    xs, ys = rng.random((5, 2)), rng.random((7, 2))
    C = cost_matrix(xs, ys, d)
    for i in range(5):
        for j in range(7):
            assert C[i, j] == pytest.approx(periodic_cost(xs[i], ys[j], d))


@given(x1=finite, y1=finite, x2=st.floats(0, 1), y2=st.floats(0, 1),
       shift=finite)
@settings(max_examples=200, deadline=None)
def test_cost_symmetry_and_translation_invariance(x1, y1, x2, y2, shift):
    d = Domain()
    a, b = np.array([x1, x2]), np.array([y1, y2])
    assert periodic_cost(a, b, d) == pytest.approx(periodic_cost(b, a, d))
    a2 = a + np.array([shift, 0.0])
    b2 = b + np.array([shift, 0.0])
    assert periodic_cost(a2, b2, d) == pytest.approx(periodic_cost(a, b, d),
                                                     abs=1e-9)


@given(x1=finite)
@settings(max_examples=100, deadline=None)
def test_remap_idempotent_and_in_window(x1):
    d = Domain()
    p = np.array([[x1, 0.3]])
    r = remap_periodic(p, d)
    assert 0.0 <= r[0, 0] < 1.0
    assert np.allclose(remap_periodic(r, d), r)
    # remap never changes the cost to any fixed point
    q = np.array([0.3, 0.7])
    assert periodic_cost(r[0], q, d) == pytest.approx(
        periodic_cost(p[0], q, d), abs=1e-9)


def test_nearest_image_x1():
    out = nearest_image_x1(np.array([0.95]), 0.05, 1.0)
    assert out[0] == pytest.approx(-0.05)
    out = nearest_image_x1(np.array([0.1]), 0.9, 1.0)
    assert out[0] == pytest.approx(1.1)
    out = nearest_image_x1(np.array([0.4]), 0.6, 1.0)
    assert out[0] == pytest.approx(0.4)
