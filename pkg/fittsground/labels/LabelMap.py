################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

from dataclasses import dataclass
from typing import FrozenSet

import numpy as np

from fittsground.geom import PatchGrid


@dataclass(frozen=True, eq=False)
class LabelMap:
    """Supervision target over the patches of a grid.

    :param grid: patch grid the labels live on
    :param values: length-M vector of non-negative reals (row-major patch order)
    :param kind: 'gaussian' or 'uniform'
    :param epsilon: stabilizer used in the normalization (0 for uniform labels)
    """

    grid: PatchGrid
    values: np.ndarray
    kind: str
    epsilon: float = 0.

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, 'values', values)
        if values.shape != (self.grid.size,):
            raise ValueError(f'label vector of shape {values.shape} does not match grid with {self.grid.size} patches')
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError('label values must be finite and non-negative')
        if self.kind not in ('gaussian', 'uniform'):
            raise ValueError(f"unknown label kind '{self.kind}'")

    @property
    def total(self) -> float:
        return float(np.sum(self.values))

    def as_image(self) -> np.ndarray:
        """Values reshaped to H x W."""
        return self.values.reshape(self.grid.shape)


@dataclass(frozen=True)
class SuppressionSet:
    """Indices of patches whose region has zero-area intersection with the ground-truth box."""

    grid: PatchGrid
    indices: FrozenSet[int]

    def __len__(self):
        return len(self.indices)

    def __contains__(self, i):
        return i in self.indices

    @property
    def mask(self) -> np.ndarray:
        """Indicator vector of the set over all M patches."""
        m = np.zeros(self.grid.size, dtype=bool)
        m[sorted(self.indices)] = True
        return m


def peak_patch(values) -> int:
    """Index of the largest entry; ties resolve to the lowest row-major index."""
    return int(np.argmax(np.asarray(values)))
