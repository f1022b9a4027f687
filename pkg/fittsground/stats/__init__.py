################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

from .decode import decode_click, decode_batch, MODES, GAMMA_DEFAULT, GAMMA_PRO
from .accuracy import element_accuracy, hits, area_terciles, size_stratified_report, EvalReport, format_table, \
    write_predictions_csv, suppression_mass_report
