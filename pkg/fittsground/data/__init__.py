################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

from .synth import SynthConfig, GroundingSample, Corpus, generate_scene, generate_corpus, iter_scenes, regenerate, \
    write_corpus, read_corpus, SIZE_CLASSES
from .ingest import AnnotationRecord, ParseError, DroppedRecord, parse_annotations, iou_filter, best_parser_iou, \
    write_filter_outputs, filter_summary, records_to_label_inputs
