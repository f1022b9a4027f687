import json
import os

import pytest

from fittsground.errors import DataError
from fittsground.data import parse_annotations, iou_filter, best_parser_iou, write_filter_outputs, \
    records_to_label_inputs

# fixture record i: gt [0, 0, 100, 100], parser box [0, 0, 100, 100 + 10 i] (IoU 100 / (100 + 10 i)) plus a
# disjoint box; every tenth record (i % 10 == 9) has no parser boxes
KEPT_AT_03 = [i for i in range(24) if i % 10 != 9]
LOW_IOU_AT_03 = [i for i in range(24, 50) if i % 10 != 9]
NO_PARSER = [9, 19, 29, 39, 49]


def _write(tmp_path, lines):
    path = os.path.join(tmp_path, 'ann.jsonl')
    with open(path, 'w') as f:
        f.write('\n'.join(lines) + ('\n' if lines else ''))
    return path


def _line(**overrides):
    obj = {'image_id': 'a', 'image_width': 100, 'image_height': 50, 'instruction': 'x', 'bbox': [0, 0, 10, 10],
           'parser_boxes': [[0, 0, 10, 10]]}
    obj.update(overrides)
    return json.dumps(obj)


class TestParse:

    def test_empty(self, tmp_path):
        records, errors = parse_annotations(_write(tmp_path, []))
        assert records == [] and errors == []

    def test_single(self, tmp_path):
        records, errors = parse_annotations(_write(tmp_path, [_line(platform='web', category='icon')]))
        assert len(records) == 1 and not errors
        r = records[0]
        assert r.gt_bbox.to_list() == [0, 0, 10, 10]
        assert (r.platform, r.category, r.image_width) == ('web', 'icon', 100.)

    def test_malformed_middle_line(self, tmp_path):
        records, errors = parse_annotations(_write(tmp_path, [_line(), '{"image_id": "b", ', _line(image_id='c')]))
        assert [r.image_id for r in records] == ['a', 'c']
        assert [e.line for e in errors] == [2]

    @pytest.mark.parametrize('bad', [_line(bbox=[0, 0, 200, 10]), _line(bbox=[5, 5, 5, 10]), '[1, 2]',
                                     json.dumps({'image_id': 'x', 'bbox': [0, 0, 1, 1]})])
    def test_invalid_records_are_reported(self, tmp_path, bad):
        records, errors = parse_annotations(_write(tmp_path, [bad]))
        assert records == [] and [e.line for e in errors] == [1]

    def test_unreadable(self, tmp_path):
        with pytest.raises(DataError):
            parse_annotations(os.path.join(tmp_path, 'missing.jsonl'))

    def test_fixture(self, fixture_path):
        records, errors = parse_annotations(fixture_path('annotations.jsonl'))
        assert len(records) == 50 and not errors
        assert records[3].category == 'icon' and records[3].platform == 'desktop'


class TestFilter:

    def test_identical_parser_box(self, tmp_path):
        records, _ = parse_annotations(_write(tmp_path, [_line()]))
        kept, dropped = iou_filter(records, 1.)
        assert len(kept) == 1 and not dropped

    def test_offset_box_dropped(self, tmp_path):
        records, _ = parse_annotations(_write(tmp_path, [_line(parser_boxes=[[5, 5, 15, 15]])]))
        assert best_parser_iou(records[0]) == pytest.approx(25 / 175)
        kept, dropped = iou_filter(records, 0.3)
        assert not kept and dropped[0].reason == 'low_iou'

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            iou_filter([], 1.5)

    def test_fixture_at_default_threshold(self, fixture_path):
        records, _ = parse_annotations(fixture_path('annotations.jsonl'))
        for i in (0, 5, 23, 24):
            assert best_parser_iou(records[i]) == pytest.approx(100 / (100 + 10 * i))
        kept, dropped = iou_filter(records, 0.3)
        assert [int(r.image_id[-2:]) for r in kept] == KEPT_AT_03
        assert [int(d.record.image_id[-2:]) for d in dropped if d.reason == 'low_iou'] == LOW_IOU_AT_03
        assert [int(d.record.image_id[-2:]) for d in dropped if d.reason == 'no_parser_boxes'] == NO_PARSER
        assert all(d.best_iou is None for d in dropped if d.reason == 'no_parser_boxes')

    def test_partition_and_idempotence(self, fixture_path):
        records, _ = parse_annotations(fixture_path('annotations.jsonl'))
        kept, dropped = iou_filter(records, 0.3)
        assert sorted(r.line for r in kept + [d.record for d in dropped]) == [r.line for r in records]
        again, dropped_again = iou_filter(kept, 0.3)
        assert again == kept and not dropped_again

    def test_monotone_in_threshold(self, fixture_path):
        records, _ = parse_annotations(fixture_path('annotations.jsonl'))
        sizes = [len(iou_filter(records, t)[0]) for t in (0., 0.2, 0.3, 0.5, 0.9, 1.)]
        assert sizes == sorted(sizes, reverse=True)
        assert sizes[0] == 45 and sizes[-1] == 1

    def test_outputs(self, fixture_path, tmp_path):
        records, errors = parse_annotations(fixture_path('annotations.jsonl'))
        kept, dropped = iou_filter(records, 0.3)
        summary = write_filter_outputs(kept, dropped, str(tmp_path), errors, 0.3)
        assert summary == {'kept': 22, 'dropped': 28, 'drop_reasons': {'low_iou': 23, 'no_parser_boxes': 5},
                           'malformed_lines': [], 'threshold': 0.3}
        with open(os.path.join(tmp_path, 'dropped.jsonl')) as f:
            rows = [json.loads(line) for line in f]
        assert rows[0]['image_id'] == 'shot-09' and rows[0]['drop_reason'] == 'no_parser_boxes'
        with open(os.path.join(tmp_path, 'kept.jsonl')) as f:
            assert json.loads(f.readline())['bbox'] == [0, 0, 100, 100]


def test_label_inputs(fixture_path):
    records, _ = parse_annotations(fixture_path('annotations.jsonl'))
    image_id, grid, box = next(records_to_label_inputs(records, 16))
    assert image_id == 'shot-00'
    assert grid.shape == (13, 13)
    assert box.to_list() == [0, 0, 100, 100]
