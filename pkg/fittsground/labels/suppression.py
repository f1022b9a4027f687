################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

import numpy as np

from fittsground.geom import BoundingBox, PatchGrid, overlap_masks
from .LabelMap import SuppressionSet


def suppression_mask_batch(grid: PatchGrid, boxes) -> np.ndarray:
    """
    :arg grid: patch grid
    :arg boxes: N-by-4 array of boxes [x1, y1, x2, y2]
    :returns: N-by-M boolean array, True where the patch has zero-area overlap with the box
    """
    return ~overlap_masks(grid, boxes)


def suppression_set(grid: PatchGrid, b: BoundingBox) -> SuppressionSet:
    """Patches whose region does not intersect the ground-truth box (touching edges count as disjoint)."""
    b.check_inside(grid.image_width, grid.image_height)
    mask = suppression_mask_batch(grid, [b.to_list()])[0]
    return SuppressionSet(grid, frozenset(int(i) for i in np.flatnonzero(mask)))
