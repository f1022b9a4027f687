################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .BoundingBox import Point


class Region(NamedTuple):
    """Pixel rectangle [x_min, x_max] x [y_min, y_max] covered by a patch."""
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @property
    def center(self) -> Point:
        return Point((self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class PatchGrid:
    """Partition of an image into M = H x W non-overlapping patches of side s.

    Patches are indexed row-major; patches in the last row/column are clipped to the image bounds
    (i.e., they may be non-square).
    """

    image_width: float
    image_height: float
    patch_size: float

    def __post_init__(self):
        if not (self.image_width > 0 and self.image_height > 0):
            raise ValueError(f'image size must be positive, got {self.image_width}x{self.image_height}')
        if not self.patch_size > 0:
            raise ValueError(f'patch size must be positive, got {self.patch_size}')

    @property
    def rows(self) -> int:
        """Number of patch rows H."""
        return math.ceil(self.image_height / self.patch_size)

    @property
    def cols(self) -> int:
        """Number of patch columns W."""
        return math.ceil(self.image_width / self.patch_size)

    @property
    def shape(self):
        return self.rows, self.cols

    @property
    def size(self) -> int:
        """Number of patches M."""
        return self.rows * self.cols

    @cached_property
    def edges(self):
        """Patch boundaries along x (length W+1) and y (length H+1), clipped to the image."""
        s = self.patch_size
        xs = np.minimum(np.arange(self.cols + 1) * s, self.image_width).astype(np.float64)
        ys = np.minimum(np.arange(self.rows + 1) * s, self.image_height).astype(np.float64)
        return xs, ys

    @cached_property
    def regions(self) -> np.ndarray:
        """M-by-4 array with rows [x_min, x_max, y_min, y_max] (row-major patch order)."""
        xs, ys = self.edges
        r, c = np.divmod(np.arange(self.size), self.cols)
        return np.stack([xs[c], xs[c + 1], ys[r], ys[r + 1]], axis=1)

    @cached_property
    def centers(self) -> np.ndarray:
        """M-by-2 array of patch centres (x, y)."""
        R = self.regions
        return np.stack([(R[:, 0] + R[:, 1]) / 2, (R[:, 2] + R[:, 3]) / 2], axis=1)

    def region(self, i: int) -> Region:
        """
        :arg i: patch index in [0, M)
        :returns: pixel rectangle of patch i
        """
        if not 0 <= i < self.size:
            raise IndexError(f'patch index {i} out of range [0, {self.size})')
        return Region(*(float(v) for v in self.regions[i]))

    def patch_of(self, p: Point) -> int:
        """Index of the patch containing p; points on the right/bottom image border map to the last column/row."""
        col = min(max(int(p.x // self.patch_size), 0), self.cols - 1)
        row = min(max(int(p.y // self.patch_size), 0), self.rows - 1)
        return row * self.cols + col

    def to_dict(self) -> dict:
        return {'image_width': self.image_width, 'image_height': self.image_height, 'patch_size': self.patch_size}
