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

import numpy as np

from fittsground.geom import BoundingBox, PatchGrid, centers_inside
from .LabelMap import LabelMap

logger = logging.getLogger(__name__)

# labels are integer multiples of 2^-52: partial sums stay exact, so rows add up to exactly 1 in any order
_UNITS = 2 ** 52


def uniform_label_batch(grid: PatchGrid, boxes) -> np.ndarray:
    """
    Uniform multi-patch labels: 1/K on each of the K patches whose centre falls inside the box.

    Elements too small to contain any patch centre fall back to the single patch containing the box centre.
    When 1/K is not representable the first patches (row-major) carry one extra 2^-52.
    :arg grid: patch grid
    :arg boxes: N-by-4 array of boxes [x1, y1, x2, y2]
    :returns: N-by-M array of labels, each row summing to exactly 1
    """
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    inside = centers_inside(grid, boxes)

    for n in np.flatnonzero(~inside.any(axis=1)):
        b = BoundingBox(*boxes[n])
        logger.warning('no patch centre inside box %s, falling back to the patch containing its centre', b.to_list())
        inside[n, grid.patch_of(b.center)] = True

    base, extra = np.divmod(_UNITS, inside.sum(axis=1))
    rank = np.cumsum(inside, axis=1) - 1
    units = np.where(inside, base[:, None] + (rank < extra[:, None]), 0)
    return units * 2. ** -52


def uniform_label_map(grid: PatchGrid, b: BoundingBox) -> LabelMap:
    """Uniform label map for a single box (see uniform_label_batch)."""
    b.check_inside(grid.image_width, grid.image_height)
    return LabelMap(grid, uniform_label_batch(grid, [b.to_list()])[0], 'uniform')
