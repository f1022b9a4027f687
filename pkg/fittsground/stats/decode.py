################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

from typing import TYPE_CHECKING

import numpy as np

from fittsground.geom import PatchGrid, Point

if TYPE_CHECKING:
    from fittsground.nn.attention_head import AttentionMap

MODES = ('argmax', 'threshold')

# per-benchmark confidence thresholds used at inference (high-resolution professional UIs / everyday UIs)
GAMMA_PRO = 0.95
GAMMA_DEFAULT = 0.8


def _check_mode(mode: str, gamma: float):
    if mode not in MODES:
        raise ValueError(f"unknown decode mode '{mode}', expected one of {MODES}")
    if mode == 'threshold' and not 0 < gamma <= 1:
        raise ValueError(f'gamma must lie in (0, 1], got {gamma}')


def decode_batch(grid: PatchGrid, probs, mode: str = 'argmax', gamma: float = GAMMA_DEFAULT) -> np.ndarray:
    """
    Click points for a stack of attention maps.

    argmax:    centre of the most attended patch (ties -> lowest row-major index)
    threshold: attention-weighted centroid of the centres of all patches with a_i >= gamma * max_j a_j
    :arg grid: common patch grid
    :arg probs: N x M attention maps
    :returns: N x 2 click points (x, y)
    """
    _check_mode(mode, gamma)
    probs = np.asarray(probs, dtype=np.float64).reshape(-1, grid.size)
    C = grid.centers
    if mode == 'argmax':
        return C[np.argmax(probs, axis=1)]

    w = np.where(probs >= gamma * probs.max(axis=1, keepdims=True), probs, 0.)
    return (w @ C) / w.sum(axis=1, keepdims=True)


def decode_click(attn: 'AttentionMap', mode: str = 'argmax', gamma: float = GAMMA_DEFAULT) -> Point:
    """Click point for one attention map (see decode_batch)."""
    x, y = decode_batch(attn.grid, attn.probs[None], mode, gamma)[0]
    return Point(float(x), float(y))
