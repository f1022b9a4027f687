################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

from .BoundingBox import BoundingBox, Point
from .PatchGrid import PatchGrid, Region
from .misc import patch_region, overlap_area, intersects, iou, bbox_center, iou_matrix, overlap_mask, overlap_masks, \
    centers_inside, element_mask
