import json
import os

import numpy as np
import pytest

from fittsground.cli import main, heatmap_pixels, OUT_ENV
from fittsground.data import SynthConfig, generate_corpus, write_corpus
from fittsground.labels import read_label_file


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def _json(out):
    return json.loads(out)


@pytest.fixture
def corpus_dir(tmp_path, capsys):
    path = tmp_path / 'corpus'
    code, out = _run(capsys, 'synth', '--scenes', 10, '--seed', 7, '--out', path)
    assert code == 0
    return path


class TestPipeline:

    def test_synth(self, corpus_dir):
        with open(corpus_dir / 'manifest.json') as f:
            manifest = json.load(f)
        assert manifest['count'] == 10 and manifest['seed'] == 7
        assert len(os.listdir(corpus_dir / 'records')) == 10
        assert not [n for n in os.listdir(corpus_dir.parent) if n.startswith('.')]

    def test_train_eval(self, corpus_dir, tmp_path, capsys):
        code, out = _run(capsys, 'train', '--corpus', corpus_dir, '--epochs', 2, '--batch-size', 4,
                         '--out', tmp_path / 'run')
        assert code == 0
        summary = _json(out)
        assert summary['command'] == 'train' and summary['epochs'] == 2
        for name in ('head.bin', 'head.json', 'train_log.jsonl', 'train_log.json'):
            assert os.path.isfile(tmp_path / 'run' / name)

        code, out = _run(capsys, 'eval', '--checkpoint', tmp_path / 'run' / 'head.bin', '--corpus', corpus_dir,
                         '--dump-attention', 1, '--out', tmp_path / 'eval')
        assert code == 0
        argmax = _json(out)
        assert argmax['count'] == 2 and argmax['mode'] == 'argmax'
        assert os.path.isfile(tmp_path / 'eval' / 'predictions.csv')
        (attention,) = os.listdir(tmp_path / 'eval' / 'attention')
        assert read_label_file(tmp_path / 'eval' / 'attention' / attention).shape == (16, 16)

        code, out = _run(capsys, 'eval', '--checkpoint', tmp_path / 'run' / 'head.bin', '--corpus', corpus_dir,
                         '--mode', 'threshold', '--gamma', 1.0, '--split', 'all', '--out', tmp_path / 'eval1')
        code, out_all = _run(capsys, 'eval', '--checkpoint', tmp_path / 'run' / 'head.bin', '--corpus', corpus_dir,
                             '--split', 'all', '--out', tmp_path / 'eval2')
        assert code == 0
        assert _json(out)['overall'] == _json(out_all)['overall']
        assert _json(out_all)['count'] == 10

    def test_train_reproducible(self, corpus_dir, tmp_path, capsys):
        for name in ('a', 'b'):
            assert _run(capsys, 'train', '--corpus', corpus_dir, '--epochs', 1, '--out', tmp_path / name)[0] == 0
        for name in ('head.bin', 'train_log.json', 'train_log.jsonl'):
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()

    def test_ablate(self, corpus_dir, tmp_path, capsys):
        code, out = _run(capsys, 'ablate', '--corpus', corpus_dir, '--epochs', 1, '--seeds', 1,
                         '--sigma-factors', 1, 6, '--out', tmp_path / 'abl')
        assert code == 0
        assert set(_json(out)['cells']) == {'fgpm+sup/sigma=1', 'fgpm+sup/sigma=6', 'fgpm/sigma=1', 'uniform+sup',
                                            'uniform'}
        assert os.path.isfile(tmp_path / 'abl' / 'ablation.json')
        assert os.path.isdir(tmp_path / 'abl' / 'checkpoints')

    def test_pretty(self, corpus_dir, tmp_path, capsys):
        code, out = _run(capsys, 'train', '--corpus', corpus_dir, '--epochs', 1, '--pretty', '--out', tmp_path / 'r')
        assert code == 0
        assert out.splitlines()[0].split() == ['epoch', 'loss', 'l_sup', 'l_attn', 'eval', 'acc.']

    def test_default_out(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv(OUT_ENV, str(tmp_path / 'env'))
        assert _run(capsys, 'synth', '--scenes', 3)[0] == 0
        assert os.path.isfile(tmp_path / 'env' / 'manifest.json')


class TestLabelsAndFilter:

    def test_filter(self, fixture_path, tmp_path, capsys):
        code, out = _run(capsys, 'filter', '--annotations', fixture_path('annotations.jsonl'), '--threshold', 0.3,
                         '--out', tmp_path / 'f')
        assert code == 0
        summary = _json(out)
        assert (summary['kept'], summary['dropped']) == (22, 28)
        with open(tmp_path / 'f' / 'kept.jsonl') as f:
            assert len(f.readlines()) == 22

    def test_gen_labels_uniform(self, fixture_path, tmp_path, capsys):
        code, out = _run(capsys, 'gen-labels', '--annotations', fixture_path('annotations.jsonl'), '--kind', 'uniform',
                         '--out', tmp_path / 'u')
        assert code == 0 and _json(out)['records'] == 50
        files = sorted(os.listdir(tmp_path / 'u' / 'labels'))
        assert len(files) == 50
        for name in files:
            assert read_label_file(tmp_path / 'u' / 'labels' / name).sum() == pytest.approx(1.)

    def test_gen_labels_reproducible(self, fixture_path, tmp_path, capsys):
        for name in ('a', 'b'):
            code, _ = _run(capsys, 'gen-labels', '--annotations', fixture_path('annotations.jsonl'), '--format', 'bin',
                           '--out', tmp_path / name)
            assert code == 0
        names = sorted(os.listdir(tmp_path / 'a' / 'labels'))
        assert names == sorted(os.listdir(tmp_path / 'b' / 'labels'))
        for name in names:
            assert (tmp_path / 'a' / 'labels' / name).read_bytes() == (tmp_path / 'b' / 'labels' / name).read_bytes()
        with open(tmp_path / 'a' / 'manifest.json') as f:
            manifest = json.load(f)
        assert manifest['sigma_factor'] == 1. and manifest['labels'][0]['peak_patch'] == 42


class TestHeatmap:

    def test_golden(self, fixture_path, tmp_path, capsys):
        code, _ = _run(capsys, 'heatmap', '--label-file', fixture_path('heatmap_map.csv'), '--scale', 1,
                       '--out', tmp_path / 'map.ppm')
        assert code == 0
        with open(fixture_path('golden.ppm'), 'rb') as f:
            assert (tmp_path / 'map.ppm').read_bytes() == f.read()

    def test_uniform_map(self):
        pixels = heatmap_pixels(np.full((3, 4), 0.25), scale=2)
        assert pixels.shape == (6, 8, 3)
        assert len(np.unique(pixels.reshape(-1, 3), axis=0)) == 1

    def test_single_peak(self):
        values = np.zeros((3, 3))
        values[1, 2] = 1.
        pixels = heatmap_pixels(values, scale=4)
        warm = np.all(pixels == [255, 0, 0], axis=-1)
        assert warm.sum() == 16
        assert warm[4:8, 8:12].all()

    def test_scaled_output(self, fixture_path, tmp_path, capsys):
        code, out = _run(capsys, 'heatmap', '--label-file', fixture_path('heatmap_map.csv'), '--out',
                         tmp_path / 'big.ppm')
        assert code == 0 and _json(out)['peak_patch'] == 1
        assert (tmp_path / 'big.ppm').read_bytes().startswith(b'P6\n32 32\n255\n')


class TestExitCodes:

    def test_no_subcommand(self, capsys):
        assert _run(capsys)[0] == 1

    def test_unknown_flag(self, tmp_path, capsys):
        assert _run(capsys, 'synth', '--bogus', '--out', tmp_path / 'x')[0] == 1
        assert not os.path.exists(tmp_path / 'x')

    def test_bad_choice(self, fixture_path, tmp_path, capsys):
        assert _run(capsys, 'gen-labels', '--annotations', fixture_path('annotations.jsonl'), '--kind', 'box',
                    '--out', tmp_path / 'x')[0] == 1

    def test_missing_out(self, capsys, monkeypatch):
        monkeypatch.delenv(OUT_ENV, raising=False)
        assert _run(capsys, 'synth', '--scenes', 2)[0] == 1

    def test_invalid_value(self, corpus_dir, tmp_path, capsys):
        assert _run(capsys, 'train', '--corpus', corpus_dir, '--lr', -1, '--out', tmp_path / 'x')[0] == 1
        assert not os.path.exists(tmp_path / 'x')

    def test_missing_corpus(self, tmp_path, capsys):
        assert _run(capsys, 'train', '--corpus', tmp_path / 'nowhere', '--out', tmp_path / 'x')[0] == 2

    def test_unreadable_label_file(self, tmp_path, capsys):
        path = tmp_path / 'map.csv'
        path.write_text('0.1,abc\n')
        assert _run(capsys, 'heatmap', '--label-file', path, '--out', tmp_path / 'x.ppm')[0] == 2
        assert not os.path.exists(tmp_path / 'x.ppm')

    def test_numerical_failure(self, tmp_path, capsys):
        corpus = generate_corpus(SynthConfig(seed=1), 10)
        corpus.feats[0, 0, 0] = np.nan
        write_corpus(corpus, str(tmp_path / 'nan'))
        assert _run(capsys, 'train', '--corpus', tmp_path / 'nan', '--epochs', 1, '--out', tmp_path / 'x')[0] == 3
        assert not os.path.exists(tmp_path / 'x')

    def _corrupt_record(self, corpus_dir, offset, value):
        path = corpus_dir / 'records' / 'scene-000003.bin'
        raw = bytearray(path.read_bytes())
        raw[offset:offset + len(value)] = value
        path.write_bytes(bytes(raw))

    def test_manifest_without_image_ids(self, corpus_dir, tmp_path, capsys):
        manifest = json.loads((corpus_dir / 'manifest.json').read_text())
        del manifest['image_ids']
        (corpus_dir / 'manifest.json').write_text(json.dumps(manifest))
        assert _run(capsys, 'train', '--corpus', corpus_dir, '--out', tmp_path / 'x')[0] == 2
        assert not os.path.exists(tmp_path / 'x')

    def test_bad_size_class_code(self, corpus_dir, tmp_path, capsys):
        self._corrupt_record(corpus_dir, 24, b'\x07')
        assert _run(capsys, 'train', '--corpus', corpus_dir, '--out', tmp_path / 'x')[0] == 2

    def test_degenerate_target_box(self, corpus_dir, tmp_path, capsys):
        raw = (corpus_dir / 'records' / 'scene-000003.bin').read_bytes()
        self._corrupt_record(corpus_dir, 68, raw[52:60])
        assert _run(capsys, 'train', '--corpus', corpus_dir, '--out', tmp_path / 'x')[0] == 2

    def test_corrupt_checkpoint(self, corpus_dir, tmp_path, capsys):
        assert _run(capsys, 'train', '--corpus', corpus_dir, '--epochs', 1, '--out', tmp_path / 'run')[0] == 0
        sidecar = json.loads((tmp_path / 'run' / 'head.json').read_text())
        sidecar['head']['embed_dim'] += 1
        (tmp_path / 'run' / 'head.json').write_text(json.dumps(sidecar))
        assert _run(capsys, 'eval', '--checkpoint', tmp_path / 'run' / 'head.bin', '--corpus', corpus_dir,
                    '--out', tmp_path / 'eval')[0] == 2
        assert not os.path.exists(tmp_path / 'eval')
