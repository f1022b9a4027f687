################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

from typing import NamedTuple, Tuple

import numpy as np

import jax.numpy as jnp
from jax.scipy.special import xlogy

from fittsground.labels import LabelMap, SuppressionSet
from .attention_head import AttentionMap

LOG_FLOOR = 1e-12


class LossBreakdown(NamedTuple):
    """Components of the combined objective total = l_ntp + lambda1 * l_sup + lambda2 * l_attn."""
    l_ntp: float
    l_sup: float
    l_attn: float
    lambda1: float
    lambda2: float
    total: float

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in self._asdict().items()}


def suppression_mass(probs: jnp.ndarray, mask: jnp.ndarray) -> jnp.ndarray:
    """Attention mass on the masked (suppressed) patches, reduced over the last axis."""
    return jnp.sum(jnp.where(mask, probs, 0.), axis=-1)


def kl_divergence(p: jnp.ndarray, a: jnp.ndarray, floor: float = LOG_FLOOR) -> jnp.ndarray:
    """
    KL(p || a) = sum_i p_i log(p_i / a_i) over the last axis with 0 log 0 = 0; a is floored inside the log.
    """
    return jnp.sum(xlogy(p, p) - xlogy(p, jnp.maximum(a, floor)), axis=-1)


def _check_grid(a, b):
    if a.grid != b.grid:
        raise ValueError(f'grid mismatch: {a.grid} vs {b.grid}')


def suppression_loss(attn: AttentionMap, g: SuppressionSet) -> Tuple[float, np.ndarray]:
    """
    Total attention mass on patches not intersecting the target.
    :arg attn: attention map
    :arg g: suppression set on the same grid
    :returns: loss in [0, 1] and its gradient w.r.t. the attention probabilities (indicator of g)
    """
    _check_grid(attn, g)
    mask = g.mask
    return float(suppression_mass(attn.probs, mask)), mask.astype(np.float64)


def kl_action_loss(target: LabelMap, attn: AttentionMap) -> Tuple[float, np.ndarray]:
    """
    KL divergence between a normalized label map p and the attention map a.
    :returns: loss >= 0 and its gradient -p_i / a_i w.r.t. the attention probabilities
    """
    _check_grid(target, attn)
    p = target.values
    if np.any(p < 0):
        raise ValueError('target label map has negative entries')
    a = np.maximum(attn.probs, LOG_FLOOR)
    return float(kl_divergence(p, attn.probs)), -p / a


def combined_loss(target: LabelMap, attn: AttentionMap, g: SuppressionSet, lambda1: float = 1.,
                  lambda2: float = 1., l_ntp: float = 0.) -> Tuple[LossBreakdown, np.ndarray]:
    """
    Combined objective l_ntp + lambda1 * suppression + lambda2 * KL.

    l_ntp is an externally supplied scalar without gradient into the head.
    :returns: loss breakdown and gradient w.r.t. the attention probabilities
    """
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError(f'loss weights must be non-negative, got lambda1={lambda1}, lambda2={lambda2}')
    l_sup, g_sup = suppression_loss(attn, g)
    l_attn, g_attn = kl_action_loss(target, attn)
    total = l_ntp + lambda1 * l_sup + lambda2 * l_attn
    return LossBreakdown(float(l_ntp), l_sup, l_attn, float(lambda1), float(lambda2), total), \
        lambda1 * g_sup + lambda2 * g_attn
