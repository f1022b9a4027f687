################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

from .LabelMap import LabelMap, SuppressionSet, peak_patch
from .gaussian import GaussianSpec, gaussian_spec, normal_cdf, patch_mass, gaussian_label_map, gaussian_label_batch, \
    DEFAULT_EPSILON
from .uniform import uniform_label_map, uniform_label_batch
from .suppression import suppression_set, suppression_mask_batch
from .export import write_label_file, read_label_file
