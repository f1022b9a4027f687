import os
from types import SimpleNamespace

import numpy as np
import pytest

import jax
import jax.numpy as jnp
from jax.flatten_util import ravel_pytree

from fittsground.geom import BoundingBox, PatchGrid
from fittsground.nn import HeadConfig, init_params

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run slow acceptance tests')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def fixture_path():
    def path(name):
        return os.path.join(FIXTURES, name)
    return path


def _head_instance(k: int) -> SimpleNamespace:
    """Small random head: 4 <= M <= 16 patches, all dimensions in [3, 8], perturbed weights, random target box."""
    rng = np.random.default_rng(1000 + k)
    while True:
        rows, cols = rng.integers(1, 5, size=2)
        if rows * cols >= 4:
            break
    grid = PatchGrid(16 * int(cols), 16 * int(rows), 16)
    d_v, d_q, hidden, embed = (int(n) for n in rng.integers(3, 9, size=4))
    config = HeadConfig(d_v, d_q, hidden, embed, seed=k)

    flat, unravel = ravel_pytree(init_params(config))
    flat = flat + 0.1 * rng.standard_normal(flat.shape)

    w = rng.uniform(4, grid.image_width)
    h = rng.uniform(4, grid.image_height)
    x1, y1 = rng.uniform(0, grid.image_width - w), rng.uniform(0, grid.image_height - h)
    return SimpleNamespace(config=config, grid=grid, params=unravel(flat), flat=flat, unravel=unravel,
                           feats=rng.standard_normal((grid.size, d_v)), query=rng.standard_normal(d_q),
                           upstream=rng.standard_normal(grid.size), box=BoundingBox(x1, y1, x1 + w, y1 + h))


@pytest.fixture
def head_instance():
    return _head_instance


@pytest.fixture
def central_differences():
    def differences(objective, flat, h=1e-4):
        """Central differences of a scalar objective along every coordinate of flat, evaluated in one batch."""
        E = h * jnp.eye(flat.size, dtype=flat.dtype)
        f = jax.jit(jax.vmap(objective))
        return np.asarray((f(flat + E) - f(flat - E)) / (2 * h))
    return differences
