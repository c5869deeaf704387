import numpy as np
import pytest

from aircover.errors import SingularSimplexError
from aircover.weights import WeightSchedule, WeightTriple, beta, solve_simplex_weights, weight_at

from oracles import cramer_weights

TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def test_centroid_weights():
    tri = np.array([[2.0, 1.0], [5.0, 2.0], [3.0, 6.0]])
    w, ext = solve_simplex_weights(tri.mean(axis=0), tri)
    assert not ext
    np.testing.assert_allclose(w, [1 / 3, 1 / 3, 1 / 3], atol=1e-14)


def test_vertex_weights():
    w, ext = solve_simplex_weights(TRI[0], TRI)
    assert not ext
    np.testing.assert_allclose(w, [1.0, 0.0, 0.0], atol=1e-14)


def test_quarter_point_matches_cramer():
    p = np.array([0.4, 0.3])
    w, ext = solve_simplex_weights(p, TRI)
    assert not ext
    np.testing.assert_allclose(w, [0.3, 0.4, 0.3], atol=1e-14)
    np.testing.assert_allclose(w, cramer_weights(p, TRI), atol=1e-14)


def test_degenerate_triangle_raises():
    bad = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(SingularSimplexError):
        solve_simplex_weights([0.5, 0.5], bad)


def test_exterior_point_flagged():
    w, ext = solve_simplex_weights([2.0, 2.0], TRI)
    assert ext
    assert w.min() < 0.0
    assert abs(w.sum() - 1.0) < 1e-12


def test_round_trip_1000_random_interior_points():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        tri = rng.uniform(-10, 10, (3, 2))
        u, v = tri[1] - tri[0], tri[2] - tri[0]
        if abs(u[0] * v[1] - u[1] * v[0]) < 1e-3:
            continue
        w_true = rng.dirichlet([1.5, 1.5, 1.5])
        p = w_true @ tri
        w, ext = solve_simplex_weights(p, tri)
        assert np.abs(w - w_true).max() < 1e-9
        assert abs(w.sum() - 1.0) < 1e-12
        assert np.linalg.norm(tri.T @ w - p) < 1e-10


def test_beta_endpoints_and_midpoint():
    assert beta(0.0, 0.0, 60.0) == 0.0
    assert beta(60.0, 0.0, 60.0) == 1.0
    assert beta(75.0, 0.0, 60.0) == 1.0
    assert beta(30.0, 0.0, 60.0) == pytest.approx(0.5, abs=1e-15)


def test_beta_domain_error():
    with pytest.raises(ValueError):
        beta(-0.1, 0.0, 60.0)
    with pytest.raises(ValueError):
        beta(0.0, 1.0, 1.0)


def test_beta_monotone_on_dense_grid():
    ts = np.linspace(0.0, 60.0, 6001)
    vals = np.array([beta(t, 0.0, 60.0) for t in ts])
    assert np.all(np.diff(vals) >= 0.0)
    assert np.all((vals >= 0.0) & (vals <= 1.0))


def _schedule():
    tri = (1, 2, 3)
    return WeightSchedule(
        initial={7: WeightTriple(tri, np.array([0.2, 0.3, 0.5]))},
        final={7: WeightTriple(tri, np.array([0.6, 0.2, 0.2]))},
        t0=0.0,
        tf=10.0,
    )


def test_weight_at_endpoints_and_midpoint():
    sched = _schedule()
    np.testing.assert_array_equal(weight_at(0.0, sched, 7), [0.2, 0.3, 0.5])
    np.testing.assert_array_equal(weight_at(10.0, sched, 7), [0.6, 0.2, 0.2])
    np.testing.assert_array_equal(weight_at(25.0, sched, 7), [0.6, 0.2, 0.2])
    np.testing.assert_allclose(weight_at(5.0, sched, 7), [0.4, 0.25, 0.35], atol=1e-15)


def test_weight_at_unknown_follower():
    with pytest.raises(KeyError):
        weight_at(0.0, _schedule(), 99)


def test_blend_preserves_unit_sum_and_positivity():
    rng = np.random.default_rng(17)
    tri = (1, 2, 3)
    for _ in range(200):
        omega = rng.dirichlet([2, 2, 2])
        varpi = rng.dirichlet([2, 2, 2])
        sched = WeightSchedule(
            initial={4: WeightTriple(tri, omega)},
            final={4: WeightTriple(tri, varpi)},
            t0=0.0,
            tf=1.0,
        )
        for t in rng.uniform(0.0, 1.5, 8):
            w = weight_at(t, sched, 4)
            assert abs(w.sum() - 1.0) < 1e-12
            assert np.all(w > 0.0)


def test_triple_validation():
    with pytest.raises(ValueError):
        WeightTriple((1, 2, 3), np.array([0.5, 0.2, 0.2]))
    with pytest.raises(ValueError):
        WeightSchedule(
            initial={1: WeightTriple((1, 2, 3), np.array([0.4, 0.3, 0.3]))},
            final={1: WeightTriple((1, 2, 4), np.array([0.4, 0.3, 0.3]))},
            t0=0.0,
            tf=1.0,
        )
