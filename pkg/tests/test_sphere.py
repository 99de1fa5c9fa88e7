import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphembed.sphere import (
    TangentVector,
    angular_multiplier,
    as_unit_vector,
    exp_map,
    geodesic_distance,
    project_to_tangent,
    retract,
    update_point,
)

S2 = 1.0 / math.sqrt(2.0)


def rand_unit(rng, p):
    x = rng.standard_normal(p)
    return x / np.linalg.norm(x)


# -- geodesic_distance

@pytest.mark.parametrize(
    "x, y, expected",
    [
        ((1.0, 0.0), (1.0, 0.0), 0.0),
        ((1.0, 0.0), (-1.0, 0.0), math.pi),
        ((1.0, 0.0), (0.0, 1.0), math.pi / 2),
    ],
)
def test_geodesic_distance(x, y, expected):
    assert geodesic_distance(np.array(x), np.array(y)) == pytest.approx(expected, abs=1e-12)


def test_geodesic_distance_matches_clamped_arccos():
    rng = np.random.default_rng(0)
    for _ in range(200):
        x, y = rand_unit(rng, 5), rand_unit(rng, 5)
        ref = math.acos(max(-1.0, min(1.0, float(x @ y))))
        assert geodesic_distance(x, y) == pytest.approx(ref, abs=1e-7)
    x = np.array([1.0, 1e-9])
    x /= np.linalg.norm(x)
    assert not math.isnan(geodesic_distance(x, x * (1 + 1e-15)))


# -- project_to_tangent

def test_projection_figure_configuration():
    x = np.array([0.0, 1.0])
    assert np.allclose(project_to_tangent(x, [-1.0, -1.0]).delta, [-1.0, 0.0])
    # the descent direction projects to [1, 0]
    assert np.allclose(project_to_tangent(x, [1.0, 1.0]).delta, [1.0, 0.0])
    assert np.allclose(project_to_tangent(x, [1.0, -1.0]).delta, [1.0, 0.0])


def test_projection_kills_radial_component():
    x = np.array([0.6, 0.8])
    assert np.allclose(project_to_tangent(x, 3.0 * x).delta, 0.0, atol=1e-15)


def test_projection_direct_evaluation():
    x = np.array([1.0, 0.0])
    g = np.array([2.0, 3.0])
    expected = (np.eye(2) - np.outer(x, x)) @ g
    assert np.allclose(project_to_tangent(x, g).delta, expected)
    assert np.allclose(expected, [0.0, 3.0])


# -- exp_map / retract

@pytest.mark.parametrize(
    "delta, expected",
    [((0.0, 0.0), (1.0, 0.0)), ((0.0, math.pi / 2), (0.0, 1.0)), ((0.0, math.pi), (-1.0, 0.0))],
)
def test_exp_map(delta, expected):
    z = TangentVector(np.array([1.0, 0.0]), np.array(delta))
    assert np.allclose(exp_map(z), expected, atol=1e-12)


def test_retract_examples():
    e1 = np.array([1.0, 0.0])
    assert np.allclose(retract(TangentVector(e1, np.zeros(2))), e1)
    assert np.allclose(retract(TangentVector(e1, np.array([0.0, 1.0]))), [S2, S2])
    step = 1.0 - S2  # 0.2929...
    y = retract(TangentVector(np.array([0.0, 1.0]), np.array([step, 0.0])))
    n = math.sqrt(step * step + 1.0)
    assert np.allclose(y, [step / n, 1.0 / n], atol=1e-15)
    assert np.allclose(y, [0.2811, 0.9597], atol=1e-4)


def test_retract_rejects_degenerate_input():
    e1 = np.array([1.0, 0.0])
    with pytest.raises(ValueError):
        retract(TangentVector(e1, -e1))


# -- angular_multiplier

def test_multiplier_figure_cases():
    x = np.array([0.0, 1.0])
    small = angular_multiplier(x, np.array([-1.0, -1.0]))
    big = angular_multiplier(x, np.array([-1.0, 1.0]))
    assert small == pytest.approx(1 - S2, abs=1e-12)
    assert big == pytest.approx(1 + S2, abs=1e-12)
    assert big > small


def test_multiplier_negative_sample():
    x = np.array([1.0, 0.0])
    assert angular_multiplier(x, np.array([0.0, 2.0]), negative_sample=True) == 0.0
    # a negative sample aligned with its gradient is pushed away, one pointing
    # away from it is pulled back toward orthogonal
    assert angular_multiplier(x, np.array([1.0, 1.0]), negative_sample=True) == pytest.approx(S2)
    assert angular_multiplier(x, np.array([-1.0, 1.0]), negative_sample=True) == pytest.approx(-S2)


def test_multiplier_zero_gradient():
    assert angular_multiplier(np.array([1.0, 0.0]), np.zeros(2)) == 0.0


def test_negative_update_moves_toward_orthogonal():
    g = np.array([1.0, 0.0])
    for x in (np.array([0.8, 0.6]), np.array([-0.8, 0.6])):
        y = update_point(x, g, 0.1, negative_sample=True)
        assert abs(y @ g) < abs(x @ g)


# -- update_point

def test_update_point_zero_gradient():
    x = np.array([0.6, 0.8])
    assert np.array_equal(update_point(x, np.zeros(2), 0.5), x)


def test_update_point_figure_composition():
    x = np.array([0.0, 1.0])
    g = np.array([-1.0, -1.0])
    mult = angular_multiplier(x, g)
    z = project_to_tangent(x, g)
    expected = retract(TangentVector(x, -1.0 * mult * z.delta))
    y = update_point(x, g, 1.0)
    assert np.allclose(y, expected, atol=1e-15)
    assert np.allclose(y, [0.2811, 0.9597], atol=1e-4)


def test_update_point_parallel_gradient():
    x = np.array([0.6, 0.8])
    assert np.allclose(update_point(x, 2.5 * x, 0.3), x, atol=1e-15)


def test_update_point_rejects_bad_eta():
    with pytest.raises(ValueError):
        update_point(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.0)


def test_as_unit_vector_validation():
    with pytest.raises(ValueError):
        as_unit_vector([1.0, 1.0])
    with pytest.raises(ValueError):
        as_unit_vector([1.0])
    assert as_unit_vector([0.0, 1.0]).dtype == np.float64


# -- properties

@pytest.mark.parametrize("p", [2, 3, 50, 100])
def test_tangency_and_norm_preservation(p):
    rng = np.random.default_rng(p)
    for _ in range(2500):
        x = rand_unit(rng, p)
        g = rng.standard_normal(p) * rng.uniform(0.01, 10)
        z = project_to_tangent(x, g)
        assert abs(x @ z.delta) <= 1e-9 * (1 + np.linalg.norm(g))
        assert abs(np.linalg.norm(retract(z)) - 1) <= 1e-12
        assert abs(np.linalg.norm(exp_map(z)) - 1) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(
    st.integers(min_value=2, max_value=40),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_projection_idempotent(p, seed):
    rng = np.random.default_rng(seed)
    x = rand_unit(rng, p)
    g = rng.standard_normal(p)
    d1 = project_to_tangent(x, g).delta
    d2 = project_to_tangent(x, d1).delta
    assert np.allclose(d1, d2, atol=1e-12, rtol=0)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(min_value=2, max_value=40),
    st.floats(min_value=0.0, max_value=math.pi),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_exp_map_isometry(p, length, seed):
    rng = np.random.default_rng(seed)
    x = rand_unit(rng, p)
    a = project_to_tangent(x, rng.standard_normal(p)).delta
    a /= np.linalg.norm(a)
    y = exp_map(TangentVector(x, length * a))
    assert geodesic_distance(x, y) == pytest.approx(length, abs=1e-9)


def test_retraction_error_is_bounded_by_step_squared():
    # Both points lie on the same great circle, at angles atan(h) and h, so the
    # gap is h - atan(h) ~ h^3/3: within O(h^2) and in fact third order.
    rng = np.random.default_rng(7)
    for p in (2, 3, 50, 100):
        x = rand_unit(rng, p)
        a = project_to_tangent(x, rng.standard_normal(p)).delta
        a /= np.linalg.norm(a)
        cubic = []
        for h in (1e-1, 1e-2, 1e-3):
            z = TangentVector(x, h * a)
            gap = geodesic_distance(retract(z), exp_map(z))
            assert gap <= h**2
            assert gap == pytest.approx(h - math.atan(h), rel=1e-3)
            cubic.append(gap / h**3)
        assert max(cubic) <= 4 * min(cubic)
