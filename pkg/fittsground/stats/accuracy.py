################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

import csv
import json
from dataclasses import dataclass, field, asdict
from typing import Dict, Optional, Sequence

import numpy as np

from fittsground.geom import BoundingBox, Point

SIZE_CLASSES = ('small', 'medium', 'large')


def hits(predictions: Sequence[Point], targets: Sequence[BoundingBox]) -> np.ndarray:
    """Boolean vector: prediction n lies inside target n (boundary inclusive)."""
    if len(predictions) != len(targets):
        raise ValueError(f'{len(predictions)} predictions for {len(targets)} targets')
    return np.asarray([b.contains(p) for p, b in zip(predictions, targets)], dtype=bool)


def element_accuracy(predictions: Sequence[Point], targets: Sequence[BoundingBox]) -> float:
    """
    Fraction of click points inside their ground-truth box.
    :arg predictions: click points
    :arg targets: ground-truth boxes (same length)
    :returns: accuracy in [0, 1]
    """
    h = hits(predictions, targets)
    if not len(h):
        raise ValueError('element accuracy of an empty evaluation set')
    return float(h.mean())


def area_terciles(areas) -> np.ndarray:
    """Split areas into small/medium/large at the 1/3 and 2/3 quantiles of the set."""
    areas = np.asarray(areas, dtype=np.float64)
    q1, q2 = np.quantile(areas, [1 / 3, 2 / 3])
    return np.asarray(SIZE_CLASSES)[np.where(areas <= q1, 0, np.where(areas <= q2, 1, 2))]


@dataclass
class EvalReport:
    """
    Element accuracy overall and per stratum. Strata without samples are absent (None), not zero.
    """

    overall: float
    count: int
    per_size: Dict[str, Optional[float]]
    size_counts: Dict[str, int]
    per_category: Dict[str, float] = field(default_factory=dict)
    category_counts: Dict[str, int] = field(default_factory=dict)
    per_platform: Dict[str, float] = field(default_factory=dict)
    platform_counts: Dict[str, int] = field(default_factory=dict)
    # keyed "platform/category"
    per_platform_category: Dict[str, float] = field(default_factory=dict)
    platform_category_counts: Dict[str, int] = field(default_factory=dict)
    mode: str = 'argmax'
    gamma: Optional[float] = None
    size_source: str = 'generated'

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path):
        with open(path, 'w') as f:
            json.dump(self.to_dict(), f, indent=2)

    def render(self) -> str:
        rows = [['overall', self.count, _fmt(self.overall)]]
        rows += [[c, self.size_counts[c], _fmt(self.per_size[c])] for c in SIZE_CLASSES]
        for per, counts in ((self.per_category, self.category_counts), (self.per_platform, self.platform_counts),
                            (self.per_platform_category, self.platform_category_counts)):
            rows += [[k, counts[k], _fmt(a)] for k, a in sorted(per.items())]
        title = f'element accuracy (decode={self.mode}' + (f', gamma={self.gamma:g})' if self.gamma else ')')
        return title + '\n' + format_table(['stratum', 'n', 'accuracy'], rows)


def _fmt(v) -> str:
    return '-' if v is None else f'{100 * v:.1f}'


def format_table(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Aligned-column plain text table."""
    cells = [[str(h) for h in headers]] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(headers))]
    lines = ['  '.join(c.ljust(w) if j == 0 else c.rjust(w) for j, (c, w) in enumerate(zip(r, widths)))
             for r in cells]
    lines.insert(1, '  '.join('-' * w for w in widths))
    return '\n'.join(lines)


def _tag(sample, name: str) -> str:
    return getattr(sample, name, None) or ''


def _strata(h: np.ndarray, keys: Sequence[str]):
    """Accuracy and count per non-empty key."""
    keys = np.asarray(keys)
    per, counts = {}, {}
    for k in sorted(set(keys.tolist()) - {''}):
        sel = keys == k
        counts[k] = int(sel.sum())
        per[k] = float(h[sel].mean())
    return per, counts


def size_stratified_report(samples: Sequence, predictions: Sequence[Point], mode: str = 'argmax',
                           gamma: float = None) -> EvalReport:
    """
    Element accuracy split into small/medium/large targets, plus category, platform and platform/category strata
    for tagged samples (e.g. parsed annotation records).

    Samples that carry a generated size_class use it; otherwise (real annotations) the classes are the area
    terciles over the evaluation set.
    :arg samples: objects with a `target` box and optional `size_class`, `category` and `platform` attributes
    :arg predictions: click points (same length)
    :arg mode: decode mode used to obtain the predictions (recorded)
    :arg gamma: confidence threshold used (recorded)
    :returns: report
    """
    targets = [s.target for s in samples]
    h = hits(predictions, targets)
    if not len(h):
        raise ValueError('element accuracy of an empty evaluation set')

    generated = [getattr(s, 'size_class', None) for s in samples]
    if all(c in SIZE_CLASSES for c in generated):
        classes, source = np.asarray(generated), 'generated'
    else:
        classes, source = area_terciles([b.area for b in targets]), 'area_terciles'

    per_size, size_counts = {}, {}
    for c in SIZE_CLASSES:
        sel = classes == c
        size_counts[c] = int(sel.sum())
        per_size[c] = float(h[sel].mean()) if sel.any() else None

    categories = [_tag(s, 'category') for s in samples]
    platforms = [_tag(s, 'platform') for s in samples]
    per_category, category_counts = _strata(h, categories)
    per_platform, platform_counts = _strata(h, platforms)
    per_pc, pc_counts = _strata(h, [f'{p}/{c}' if p and c else '' for p, c in zip(platforms, categories)])

    return EvalReport(float(h.mean()), len(h), per_size, size_counts, per_category, category_counts, per_platform,
                      platform_counts, per_pc, pc_counts, mode, gamma if mode == 'threshold' else None, source)


def write_predictions_csv(path, samples: Sequence, predictions: Sequence[Point]):
    """Per-sample CSV with columns image_id, pred_x, pred_y, hit."""
    h = hits(predictions, [s.target for s in samples])
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['image_id', 'pred_x', 'pred_y', 'hit'])
        for s, p, hit in zip(samples, predictions, h):
            writer.writerow([getattr(s, 'image_id', ''), repr(float(p.x)), repr(float(p.y)), int(hit)])


def suppression_mass_report(probs, masks) -> dict:
    """
    Attention mass that falls on patches disjoint from the target, over an evaluation split.
    :arg probs: N x M attention maps
    :arg masks: N x M suppression masks
    :returns: mean, standard deviation and maximum of the per-sample mass
    """
    probs, masks = np.asarray(probs, dtype=np.float64), np.asarray(masks, dtype=bool)
    if probs.shape != masks.shape:
        raise ValueError(f'attention maps {probs.shape} and suppression masks {masks.shape} differ in shape')
    mass = np.sum(np.where(masks, probs, 0.), axis=-1)
    return {'mean': float(mass.mean()), 'std': float(mass.std()), 'max': float(mass.max()), 'count': int(mass.size)}
