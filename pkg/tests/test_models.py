import math

import numpy as np
import pytest

from amisc.errors import ModelEvaluationError
from amisc.models import (
    AdvectionDiffusionConfig,
    advection_cost,
    advection_diffusion_ensemble,
    cosine_2d,
    cosine_ladder,
    kle_diffusivity,
    single_model,
)
from amisc.models.advection import forcing, kle_eigenvalues, solve_qoi

SMALL = AdvectionDiffusionConfig(n_kle=4, max_level=3)


def test_ladder_values():
    ens = cosine_ladder()
    assert ens.bounds == (2,)
    assert abs(ens.reference(np.zeros(1))[0] - math.cos(2 * math.pi / 5)) < 1e-15
    z = np.linspace(-1, 1, 100)
    gaps = [
        max(abs(ens.evaluate((a + 1,), [x])[0] - ens.evaluate((a,), [x])[0]) for x in z) for a in range(2)
    ]
    assert gaps[1] < gaps[0]
    assert [ens.cost((a,)) for a in range(3)] == [1.0, 2.0, 4.0]


def test_ladder_validation():
    with pytest.raises(ValueError):
        cosine_ladder(eps=(0.1, 0.2))
    with pytest.raises(ValueError):
        cosine_ladder(costs=(1.0, 1.0, 2.0))


def test_cosine_2d_values():
    ens = cosine_2d()
    assert ens.evaluate((0,), np.zeros(2))[0] == 1.0
    for z2 in np.linspace(-1, 1, 5):
        for z1 in (-1.0, 1.0):
            assert abs(ens.evaluate((0,), [z1, z2])[0] - math.cos(math.pi * z2)) < 1e-15


def test_evaluate_many_wraps_failures():
    def bad(z):
        if z[0] > 0:
            raise FloatingPointError("blew up")
        return np.array([np.nan]) if z[0] < -0.5 else np.array([1.0])

    ens = single_model("bad", bad, n_z=1)
    with pytest.raises(ModelEvaluationError) as info:
        ens.evaluate_many((0,), np.array([[0.0], [0.3]]))
    assert info.value.alpha == (0,) and info.value.z == (0.3,)
    with pytest.raises(ModelEvaluationError):
        ens.evaluate_many((0,), np.array([[-0.9]]))


def test_physical_map():
    ens = advection_diffusion_ensemble(SMALL)
    np.testing.assert_allclose(ens.to_physical([-1, 0, 1, 0.5]), [-math.sqrt(3), 0, math.sqrt(3), math.sqrt(3) / 2])


def test_diffusivity():
    cfg = AdvectionDiffusionConfig()
    assert abs(kle_diffusivity([0.3, 0.7], np.zeros(10), cfg) - (0.5 + math.e)) < 1e-14
    lam = kle_eigenvalues(cfg)
    assert lam[1] == lam[2] and lam[3] == lam[4]
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, size=(200, 2))
    for _ in range(20):
        z = rng.uniform(-math.sqrt(3), math.sqrt(3), 10)
        assert np.all(kle_diffusivity(x, z, cfg) > 0.5)


def test_forcing_at_zero():
    x1 = np.linspace(0, 1, 7)
    np.testing.assert_allclose(forcing(x1, 0.0), 2.5 * np.cos(x1))


def test_costs():
    assert advection_cost((0, 0, 0)) == 64
    assert advection_cost((1, 0, 0)) == 128
    ens = advection_diffusion_ensemble(SMALL)
    assert ens.cost((3, 3, 3)) == 1.0
    ens = advection_diffusion_ensemble(SMALL, top_level=2)
    assert ens.cost((2, 2, 2)) == 1.0 and ens.bounds == (2, 2, 2)
    with pytest.raises(ValueError):
        advection_diffusion_ensemble(SMALL, top_level=4)


def test_truth_is_finest_model():
    ens = advection_diffusion_ensemble(SMALL, top_level=1)
    z = np.full(4, 0.2)
    assert ens.reference(z)[0] == ens.evaluate((3, 3, 3), z)[0]
    assert ens.info["truth_alpha"] == (3, 3, 3)


def _orders(axis):
    base = [3, 3, 3]
    values = []
    for level in range(0, 4):
        alpha = list(base)
        alpha[axis] = level
        values.append(solve_qoi(alpha, np.zeros(4), SMALL))
    d = np.abs(np.diff(values))
    return np.log2(d[:-1] / d[1:])


def test_space_refinement_is_second_order():
    for axis in (0, 1):
        assert abs(_orders(axis)[-1] - 2.0) < 0.3


def test_qoi_is_lipschitz():
    ens = advection_diffusion_ensemble(SMALL)
    rng = np.random.default_rng(5)
    ratios = []
    for _ in range(20):
        z, w = rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 4)
        f = ens.evaluate_many((1, 1, 1), np.stack([z, w]))
        ratios.append(abs(f[0, 0] - f[1, 0]) / np.linalg.norm(z - w))
    assert np.isfinite(ratios).all() and max(ratios) < 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        AdvectionDiffusionConfig(n_kle=0)
    with pytest.raises(ValueError):
        AdvectionDiffusionConfig(sigma=0.0)
