import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from rosb.estimator import InsufficientData, LeastSquaresEstimator, Measurement, solve_ls
from rosb.geometry import seeded_rng


def exact_ranges(positions, q):
    return np.linalg.norm(np.asarray(positions) - q, axis=1)


def grid_search(positions, ranges, lo=-0.2, hi=0.2, n=401):
    """Brute-force minimiser of sum(|p_i - q| - d_i)^2, refined locally."""
    xs = np.linspace(lo, hi, n)
    X, Y = np.meshgrid(xs, xs)
    cost = sum((np.hypot(X - p[0], Y - p[1]) - d) ** 2 for p, d in zip(positions, ranges))
    i = np.unravel_index(np.argmin(cost), cost.shape)
    start = np.array([X[i], Y[i]])
    f = lambda q: sum((np.hypot(*(q - p)) - d) ** 2 for p, d in zip(positions, ranges))
    return minimize(f, start, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-24}).x


def test_noiseless_triangle_recovers_target():
    positions = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]])
    q = np.array([0.03, 0.04])
    ranges = exact_ranges(positions, q)
    oracle = grid_search(positions, ranges)
    assert np.linalg.norm(oracle - q) < 1e-6
    est = solve_ls(positions, ranges)
    assert est.valid
    assert np.linalg.norm(est.q_hat - q) < 1e-9
    assert abs(est.s - q @ q) < 1e-9


def test_collinear_positions_are_invalid():
    positions = np.array([[x, 0.0] for x in (0.0, 0.05, 0.1, 0.2)])
    est = solve_ls(positions, exact_ranges(positions, np.array([0.05, 0.08])))
    assert not est.valid
    # a line not through the origin is equally ambiguous
    positions = np.array([[x, 0.3 + 0.5 * x] for x in (0.0, 0.05, 0.1)])
    assert not solve_ls(positions, exact_ranges(positions, np.array([0.0, 0.0]))).valid


def test_too_few_measurements():
    est = LeastSquaresEstimator(30)
    est.add([0.0, 0.0], 0.1)
    est.add([0.1, 0.0], 0.1)
    with pytest.raises(InsufficientData):
        est.solve()


def test_window_eviction():
    est = LeastSquaresEstimator(30)
    for k in range(31):
        est.push(Measurement(np.array([k * 0.01, 0.0]), 0.1, k))
    assert len(est) == 30
    assert est.measurements[0].step == 1
    big = LeastSquaresEstimator(300)
    for k in range(300):
        big.add([math.cos(k), math.sin(k)], 1.0, k)
    assert len(big) == 300


def test_window_ignores_old_data():
    rng = seeded_rng(3)
    q = np.array([0.02, -0.01])
    pts = rng.uniform(-0.3, 0.3, size=(40, 2))
    ranges = exact_ranges(pts, q) + rng.normal(0, 1e-3, 40)
    a = LeastSquaresEstimator(10)
    b = LeastSquaresEstimator(10)
    for p, d in zip(pts, ranges):
        a.add(p, d)
    junk = rng.uniform(-1, 1, size=(25, 2))
    for p in junk:
        b.add(p, 0.5)
    for p, d in zip(pts[-10:], ranges[-10:]):
        b.add(p, d)
    assert np.array_equal(a.solve().q_hat, b.solve().q_hat)


def test_measurement_rejects_negative_range():
    with pytest.raises(ValueError):
        Measurement(np.zeros(2), -1.0)


coords = st.floats(min_value=-0.5, max_value=0.5)


@settings(max_examples=200)
@given(st.lists(st.tuples(coords, coords), min_size=3, max_size=3),
       st.tuples(coords, coords), st.tuples(coords, coords), st.floats(-math.pi, math.pi))
def test_equivariance(points, target, shift, angle):
    pts = np.array(points)
    u, v = pts[1] - pts[0], pts[2] - pts[0]
    area = 0.5 * abs(u[0] * v[1] - u[1] * v[0])
    if area < 1e-3:
        return
    q = np.array(target)
    est = solve_ls(pts, exact_ranges(pts, q))
    assert np.linalg.norm(est.q_hat - q) < 1e-9
    t = np.array(shift)
    moved = solve_ls(pts + t, exact_ranges(pts + t, q + t))
    assert np.allclose(moved.q_hat, est.q_hat + t, atol=1e-9)
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    turned = solve_ls(pts @ rot.T, exact_ranges(pts @ rot.T, rot @ q))
    assert np.allclose(turned.q_hat, rot @ est.q_hat, atol=1e-9)


def test_noisy_circle_median_error_below_one_meter():
    """100 pings on a 283 m circle, 200 m depth, 1 m noise."""
    depth, radius = 0.2, 0.283
    errors = []
    for seed in range(100):
        rng = seeded_rng(seed)
        q = rng.uniform(-0.2, 0.2, 2)
        theta = np.linspace(0, 2 * np.pi, 100, endpoint=False)
        pts = q + radius * np.column_stack([np.cos(theta), np.sin(theta)])
        slant = np.hypot(radius, depth) + rng.normal(0, 1e-3, 100)
        est = solve_ls(pts, np.sqrt(slant**2 - depth**2))
        errors.append(np.linalg.norm(est.q_hat - q))
    assert np.median(errors) < 1e-3
