import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amisc.errors import NotReadyError
from amisc.tensorgrid import (
    TensorComponent,
    as_index,
    index_leq,
    tensor_eval,
    tensor_mean,
    tensor_points,
    tensor_size,
)
from oracles import brute_force_tensor_eval

betas = st.lists(st.integers(min_value=0, max_value=3), min_size=1, max_size=3).map(tuple)


def cosine_2d(z):
    return np.cos(2 * np.pi * z[..., 0]) * np.cos(np.pi * z[..., 1])


def component(beta, f):
    comp = TensorComponent(alpha=(), beta=beta)
    comp.set_values(f(comp.points))
    return comp


def test_as_index_validates():
    assert as_index([1, 2]) == (1, 2)
    with pytest.raises(ValueError):
        as_index([])
    with pytest.raises(ValueError):
        as_index([0, -1])
    assert index_leq((0, 1), (1, 1)) and not index_leq((2, 0), (1, 1))


def test_small_grids():
    np.testing.assert_array_equal(tensor_points((0, 0)), [[0.0, 0.0]])
    pts = tensor_points((1, 1))
    assert pts.shape == (9, 2)
    assert {tuple(np.round(p, 12)) for p in pts} == {(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)}
    assert tensor_size((2, 2)) == 25


def test_point_order_is_c_order():
    pts = tensor_points((1, 2))
    # dimension 0 varies slowest
    np.testing.assert_array_equal(pts[:5, 0], np.full(5, 1.0))
    np.testing.assert_allclose(pts[:5, 1], np.cos(np.pi * np.arange(5) / 4), atol=1e-16)


@given(betas)
def test_grid_size(beta):
    assert tensor_points(beta).shape == (tensor_size(beta), len(beta))


@given(betas, st.floats(min_value=-3, max_value=3))
def test_constant_reproduced(beta, c):
    comp = component(beta, lambda p: np.full(len(p), c))
    z = np.linspace(-1, 1, 7)[:, None].repeat(len(beta), axis=1)
    np.testing.assert_allclose(tensor_eval(comp, z)[:, 0], c, atol=1e-12 * (1 + abs(c)))
    assert abs(tensor_mean(comp)[0] - c) < 1e-12 * (1 + abs(c))


def test_linear_and_means():
    comp = component((1, 0, 0), lambda p: p[:, 0])
    assert abs(tensor_eval(comp, [0.5, 0.1, -0.3])[0] - 0.5) < 1e-15
    assert abs(tensor_mean(comp)[0]) < 1e-16
    comp = component((1, 0), lambda p: p[:, 0] ** 2)
    assert abs(tensor_mean(comp)[0] - 1 / 3) < 1e-15


def test_matches_direct_summation():
    comp = component((2, 2), cosine_2d)
    rng = np.random.default_rng(3)
    for z in rng.uniform(-1, 1, size=(10, 2)):
        expected = brute_force_tensor_eval((2, 2), cosine_2d, z)
        assert abs(tensor_eval(comp, z)[0] - expected) < 1e-12


@settings(max_examples=30)
@given(betas)
def test_interpolates_at_grid_points(beta):
    f = lambda p: np.sin(p.sum(axis=1)) + p[:, 0]  # noqa: E731
    comp = component(beta, f)
    np.testing.assert_allclose(tensor_eval(comp, comp.points)[:, 0], f(comp.points), atol=1e-13)


def test_vector_qoi_shapes():
    comp = TensorComponent(alpha=(1,), beta=(1, 2))
    comp.set_values(np.stack([comp.points[:, 0], comp.points[:, 1] ** 2], axis=1))
    out = tensor_eval(comp, np.zeros((4, 2)))
    assert out.shape == (4, 2)
    np.testing.assert_allclose(tensor_mean(comp), [0.0, 1 / 3], atol=1e-15)


def test_not_ready():
    comp = TensorComponent(alpha=(), beta=(1,))
    with pytest.raises(NotReadyError):
        tensor_eval(comp, [0.0])
    with pytest.raises(ValueError):
        comp.set_values(np.zeros(4))


def test_wrong_point_dimension():
    comp = component((1, 1), cosine_2d)
    with pytest.raises(ValueError):
        tensor_eval(comp, [0.0, 0.0, 0.0])


@given(st.lists(st.integers(min_value=1, max_value=4), min_size=1, max_size=5))
def test_cartesian_matches_itertools(sizes):
    import itertools

    from amisc.tensorgrid import cartesian

    arrays = [np.arange(n) * 10 + k for k, n in enumerate(sizes)]
    expected = np.array(list(itertools.product(*arrays)))
    np.testing.assert_array_equal(cartesian(arrays), expected)
