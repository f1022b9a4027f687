################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

"""
Reading of ScreenSpot-style JSONL annotations and the IoU-based quality filter.

One JSON object per line:
    image_id       str
    image_width    number (pixels)
    image_height   number (pixels)
    instruction    str
    bbox           [x1, y1, x2, y2] ground-truth box (pixels)
    parser_boxes   list of [x1, y1, x2, y2] detected by a screen parser (optional, may be empty)
    platform       str (optional)
    category       str (optional, e.g. "text" / "icon")
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple


from fittsground.errors import DataError
from fittsground.geom import BoundingBox, PatchGrid, iou_matrix

logger = logging.getLogger(__name__)

LOW_IOU = 'low_iou'
NO_PARSER_BOXES = 'no_parser_boxes'


@dataclass(frozen=True, eq=False)
class AnnotationRecord:
    image_id: str
    image_width: float
    image_height: float
    instruction: str
    target: BoundingBox
    parser_boxes: List[BoundingBox] = field(default_factory=list)
    platform: Optional[str] = None
    category: Optional[str] = None
    line: int = 0

    @property
    def gt_bbox(self) -> BoundingBox:
        return self.target

    def to_json(self) -> dict:
        d = {'image_id': self.image_id, 'image_width': self.image_width, 'image_height': self.image_height,
             'instruction': self.instruction, 'bbox': self.target.to_list(),
             'parser_boxes': [b.to_list() for b in self.parser_boxes]}
        if self.platform is not None:
            d['platform'] = self.platform
        if self.category is not None:
            d['category'] = self.category
        return d

    def grid(self, patch_size: float) -> PatchGrid:
        return PatchGrid(self.image_width, self.image_height, patch_size)


class ParseError(NamedTuple):
    line: int
    message: str


def _record(obj: dict, line: int) -> AnnotationRecord:
    if not isinstance(obj, dict):
        raise ValueError('line is not a JSON object')
    missing = [k for k in ('image_id', 'image_width', 'image_height', 'bbox') if k not in obj]
    if missing:
        raise ValueError(f'missing field(s) {", ".join(missing)}')
    width, height = float(obj['image_width']), float(obj['image_height'])
    if not (width > 0 and height > 0):
        raise ValueError(f'invalid image size {width}x{height}')
    target = BoundingBox.from_list(obj['bbox'])
    target.check_inside(width, height)
    parser_boxes = [BoundingBox.from_list(b) for b in obj.get('parser_boxes') or []]
    return AnnotationRecord(str(obj['image_id']), width, height, str(obj.get('instruction', '')), target,
                            parser_boxes, obj.get('platform'), obj.get('category'), line)


def parse_annotations(path) -> Tuple[List[AnnotationRecord], List[ParseError]]:
    """
    Parse an annotation file. Malformed lines are collected with their (1-based) line numbers, never dropped
    silently; blank lines are skipped.
    :arg path: JSONL file
    :returns: records and error report
    """
    records, errors = [], []
    try:
        with open(path, encoding='utf-8') as f:
            lines = f.readlines()
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(f'cannot read annotations {path}: {e}') from e

    for n, text in enumerate(lines, start=1):
        if not text.strip():
            continue
        try:
            records.append(_record(json.loads(text), n))
        except (ValueError, TypeError) as e:
            logger.warning('%s:%d: skipping malformed annotation (%s)', path, n, e)
            errors.append(ParseError(n, str(e)))
    return records, errors


class DroppedRecord(NamedTuple):
    record: AnnotationRecord
    reason: str
    best_iou: Optional[float]


def best_parser_iou(record: AnnotationRecord) -> Optional[float]:
    """Largest IoU between the ground truth and any parser box (None without parser boxes)."""
    if not record.parser_boxes:
        return None
    return float(iou_matrix([record.target], record.parser_boxes).max())


def iou_filter(records: Sequence[AnnotationRecord], threshold: float = 0.3) \
        -> Tuple[List[AnnotationRecord], List[DroppedRecord]]:
    """
    Keep records whose ground truth is confirmed by a parser box, i.e., max IoU >= threshold.
    Records without parser boxes cannot be validated and are dropped with their own reason.
    :arg records: annotation records
    :arg threshold: IoU threshold in [0, 1]
    :returns: kept records and dropped records (both in input order)
    """
    if not 0 <= threshold <= 1:
        raise ValueError(f'IoU threshold must lie in [0, 1], got {threshold}')
    kept, dropped = [], []
    for r in records:
        best = best_parser_iou(r)
        if best is None:
            dropped.append(DroppedRecord(r, NO_PARSER_BOXES, None))
        elif best >= threshold:
            kept.append(r)
        else:
            dropped.append(DroppedRecord(r, LOW_IOU, best))
    return kept, dropped


def filter_summary(kept, dropped, errors: Sequence[ParseError] = (), threshold: float = None) -> dict:
    reasons = {LOW_IOU: 0, NO_PARSER_BOXES: 0}
    for d in dropped:
        reasons[d.reason] += 1
    summary = {'kept': len(kept), 'dropped': len(dropped), 'drop_reasons': reasons,
               'malformed_lines': [e.line for e in errors]}
    if threshold is not None:
        summary['threshold'] = threshold
    return summary


def write_filter_outputs(kept, dropped, out_dir, errors: Sequence[ParseError] = (), threshold: float = None) -> dict:
    """
    Write kept.jsonl, dropped.jsonl (with 'drop_reason' and 'best_iou' fields) and summary.json to out_dir.
    :returns: the summary
    """
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, 'kept.jsonl'), 'w') as f:
        for r in kept:
            f.write(json.dumps(r.to_json()) + '\n')
    with open(os.path.join(out_dir, 'dropped.jsonl'), 'w') as f:
        for d in dropped:
            f.write(json.dumps(dict(d.record.to_json(), drop_reason=d.reason, best_iou=d.best_iou)) + '\n')
    summary = filter_summary(kept, dropped, errors, threshold)
    with open(os.path.join(out_dir, 'summary.json'), 'w') as f:
        json.dump(summary, f, indent=2)
    return summary


def records_to_label_inputs(records: Sequence[AnnotationRecord], patch_size: float) \
        -> Iterator[Tuple[str, PatchGrid, BoundingBox]]:
    """(image_id, grid, ground-truth box) per record, the grid built from the record's own image size."""
    for r in records:
        yield r.image_id, r.grid(patch_size), r.target
