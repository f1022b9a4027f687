################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

from .attention_head import HeadConfig, AttentionMap, GroundingHead, SelfAttention, ProjectionMLP, build_head, \
    init_params, contextualize, logits, attention_forward, backward, batched_probs
from .losses import LossBreakdown, suppression_loss, kl_action_loss, combined_loss, suppression_mass, kl_divergence
from .checkpoint import save_params, load_params
from .train import TrainConfig, TrainingState, TrainLog, train, evaluate, predict, update, split_indices, \
    label_targets
from .ablation import AblationCell, ablation_cells, run_ablation_matrix, render_ablation_table, write_ablation_report
