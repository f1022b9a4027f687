################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

import sys

from fittsground.cli import main

sys.exit(main())
