################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

from typing import Sequence, Union

import numpy as np

from .BoundingBox import BoundingBox, Point
from .PatchGrid import PatchGrid, Region

Rect = Union[BoundingBox, Region]


def _corners(r: Rect):
    if isinstance(r, BoundingBox):
        return r.x1, r.y1, r.x2, r.y2
    return r.x_min, r.y_min, r.x_max, r.y_max


def patch_region(grid: PatchGrid, i: int) -> Region:
    """Pixel rectangle of patch i (edge patches clipped to the image)."""
    return grid.region(i)


def overlap_area(a: Rect, b: Rect) -> float:
    """Area of the intersection of two axis-aligned rectangles (0 if disjoint or only touching)."""
    ax1, ay1, ax2, ay2 = _corners(a)
    bx1, by1, bx2, by2 = _corners(b)
    w = min(ax2, bx2) - max(ax1, bx1)
    h = min(ay2, by2) - max(ay1, by1)
    return max(w, 0.) * max(h, 0.)


def intersects(region: Rect, b: BoundingBox) -> bool:
    """True iff the interiors overlap with positive area; shared edges do not count."""
    return overlap_area(region, b) > 0


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    inter = overlap_area(a, b)
    if inter <= 0:
        return 0.
    return inter / (a.area + b.area - inter)


def bbox_center(b: BoundingBox) -> Point:
    return b.center


def iou_matrix(boxes_a: Sequence[BoundingBox], boxes_b: Sequence[BoundingBox]) -> np.ndarray:
    """
    Pairwise IoU of two box collections.
    :arg boxes_a: n boxes
    :arg boxes_b: m boxes
    :returns: n-by-m array of IoU values
    """
    A = np.asarray([b.to_list() for b in boxes_a], dtype=np.float64).reshape(-1, 4)
    B = np.asarray([b.to_list() for b in boxes_b], dtype=np.float64).reshape(-1, 4)

    w = np.minimum(A[:, None, 2], B[None, :, 2]) - np.maximum(A[:, None, 0], B[None, :, 0])
    h = np.minimum(A[:, None, 3], B[None, :, 3]) - np.maximum(A[:, None, 1], B[None, :, 1])
    inter = np.clip(w, 0, None) * np.clip(h, 0, None)

    area_a = (A[:, 2] - A[:, 0]) * (A[:, 3] - A[:, 1])
    area_b = (B[:, 2] - B[:, 0]) * (B[:, 3] - B[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return np.where(inter > 0, inter / union, 0.)


def _as_boxes(boxes) -> np.ndarray:
    if isinstance(boxes, BoundingBox):
        boxes = [boxes.to_list()]
    return np.asarray(boxes, dtype=np.float64).reshape(-1, 4)


def overlap_masks(grid: PatchGrid, boxes) -> np.ndarray:
    """
    :arg grid: patch grid
    :arg boxes: N-by-4 array of boxes [x1, y1, x2, y2]
    :returns: N-by-M boolean array, True where area(R_i ∩ b) > 0
    """
    boxes = _as_boxes(boxes)
    R = grid.regions
    w = np.minimum(R[None, :, 1], boxes[:, None, 2]) - np.maximum(R[None, :, 0], boxes[:, None, 0])
    h = np.minimum(R[None, :, 3], boxes[:, None, 3]) - np.maximum(R[None, :, 2], boxes[:, None, 1])
    return (w > 0) & (h > 0)


def overlap_mask(grid: PatchGrid, b: BoundingBox) -> np.ndarray:
    """Boolean vector over patches: True where area(R_i ∩ b) > 0."""
    return overlap_masks(grid, b)[0]


def centers_inside(grid: PatchGrid, boxes) -> np.ndarray:
    """N-by-M mask of patch centres lying inside each box (boundary inclusive)."""
    boxes = _as_boxes(boxes)[:, None, :]
    C = grid.centers[None]
    return (boxes[..., 0] <= C[..., 0]) & (C[..., 0] <= boxes[..., 2]) & \
           (boxes[..., 1] <= C[..., 1]) & (C[..., 1] <= boxes[..., 3])


def element_mask(grid: PatchGrid, b: BoundingBox) -> np.ndarray:
    """
    Patches occupied by an element: those whose centre lies inside b, or the patch holding bbox_center(b) when
    the element is too small to contain any centre. Never empty.
    """
    mask = centers_inside(grid, b)[0]
    if not mask.any():
        mask[grid.patch_of(b.center)] = True
    return mask
