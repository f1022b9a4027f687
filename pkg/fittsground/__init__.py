################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

import jax

# label integration and gradient checks need double precision throughout
jax.config.update('jax_enable_x64', True)

__version__ = '0.1.dev0'
