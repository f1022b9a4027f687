################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

import logging
from dataclasses import dataclass

import numpy as np

import jax
import jax.numpy as jnp
from jax.scipy.special import erf

from fittsground.errors import NumericalError
from fittsground.geom import BoundingBox, PatchGrid, Point, Region
from .LabelMap import LabelMap

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class GaussianSpec:
    """Axis-aligned 2D normal N(mu, diag(sigma_x², sigma_y²)) modelling where a target is pointed at.

    The standard deviations scale with the element size: sigma_x = w / sigma_factor, sigma_y = h / sigma_factor.
    """

    mu: Point
    sigma_x: float
    sigma_y: float
    sigma_factor: float

    @property
    def covariance(self) -> np.ndarray:
        return np.diag([self.sigma_x ** 2, self.sigma_y ** 2])


def gaussian_spec(b: BoundingBox, sigma_factor: float = 1.) -> GaussianSpec:
    """
    Fitts-Gaussian for a target box.
    :arg b: ground-truth box
    :arg sigma_factor: divisor turning width/height into standard deviations (larger -> sharper peak)
    :returns: Gaussian centred at the box centroid
    """
    if not sigma_factor > 0:
        raise ValueError(f'sigma_factor must be positive, got {sigma_factor}')
    return GaussianSpec(b.center, b.width / sigma_factor, b.height / sigma_factor, sigma_factor)


def normal_cdf(t, mu, sigma):
    """Univariate normal CDF Φ(t; mu, sigma) via the error function."""
    return 0.5 * (1. + erf((t - mu) / (sigma * jnp.sqrt(2.))))


def interval_mass(lo, hi, mu, sigma):
    """Probability of [lo, hi] under N(mu, sigma²), clamped against cancellation."""
    return jnp.clip(normal_cdf(hi, mu, sigma) - normal_cdf(lo, mu, sigma), 0., None)


def patch_mass(spec: GaussianSpec, region: Region) -> float:
    """
    Gaussian mass inside a rectangle, using separability into two univariate CDF differences.
    :arg spec: Gaussian
    :arg region: rectangle [x_min, x_max] x [y_min, y_max]
    :returns: y_i >= 0
    """
    mx = interval_mass(region.x_min, region.x_max, spec.mu.x, spec.sigma_x)
    my = interval_mass(region.y_min, region.y_max, spec.mu.y, spec.sigma_y)
    return float(mx * my)


@jax.jit
def _patch_masses(xs, ys, box, sigma_factor):
    """Unnormalized masses y (H*W,) for one box [x1, y1, x2, y2] on a grid with boundaries xs, ys."""
    cx, cy = (box[0] + box[2]) / 2, (box[1] + box[3]) / 2
    sx, sy = (box[2] - box[0]) / sigma_factor, (box[3] - box[1]) / sigma_factor
    px = interval_mass(xs[:-1], xs[1:], cx, sx)
    py = interval_mass(ys[:-1], ys[1:], cy, sy)
    return jnp.outer(py, px).reshape(-1)


@jax.jit
def _normalize(y, epsilon):
    return y / (jnp.sum(y, axis=-1, keepdims=True) + epsilon)


def gaussian_label_batch(grid: PatchGrid, boxes, sigma_factor: float = 1., epsilon: float = DEFAULT_EPSILON):
    """
    Normalized Fitts-Gaussian labels p_i = y_i / (sum_j y_j + epsilon) for a stack of boxes on a common grid.
    :arg grid: patch grid
    :arg boxes: N-by-4 array of boxes [x1, y1, x2, y2]
    :arg sigma_factor: Gaussian concentration
    :arg epsilon: normalization stabilizer
    :returns: N-by-M array of labels
    """
    if not sigma_factor > 0:
        raise ValueError(f'sigma_factor must be positive, got {sigma_factor}')
    if not epsilon >= 0:
        raise ValueError(f'epsilon must be non-negative, got {epsilon}')
    xs, ys = grid.edges
    boxes = jnp.asarray(boxes, dtype=jnp.float64).reshape(-1, 4)
    y = jax.vmap(_patch_masses, (None, None, 0, None))(jnp.asarray(xs), jnp.asarray(ys), boxes, sigma_factor)

    total = np.asarray(jnp.sum(y, axis=1))
    degenerate = np.flatnonzero(~np.isfinite(total) | (total <= 0))
    if len(degenerate):
        raise NumericalError('Gaussian mass vanishes on every patch', boxes=np.asarray(boxes[degenerate]).tolist(),
                             sigma_factor=sigma_factor)
    return _normalize(y, epsilon)


def gaussian_label_map(grid: PatchGrid, b: BoundingBox, sigma_factor: float = 1.,
                       epsilon: float = DEFAULT_EPSILON) -> LabelMap:
    """
    Fitts-Gaussian label map: per-patch integral of the target Gaussian, normalized with a stabilizer.

    Mass falling outside the image is dropped (not redistributed); the normalization accounts for it.
    :arg grid: patch grid
    :arg b: ground-truth box (inside the grid's image)
    :arg sigma_factor: Gaussian concentration
    :arg epsilon: normalization stabilizer
    :returns: normalized label map
    """
    b.check_inside(grid.image_width, grid.image_height)
    values = gaussian_label_batch(grid, np.asarray([b.to_list()]), sigma_factor, epsilon)[0]
    return LabelMap(grid, np.asarray(values), 'gaussian', epsilon)
