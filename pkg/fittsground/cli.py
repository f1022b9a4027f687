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
Command-line entry point: ``fittsground <subcommand> [options]``.

Every subcommand writes its artifacts below ``--out`` (default: $FITTSGROUND_OUT) through a temporary sibling that
is renamed on success, and prints a JSON summary to stdout. Exit codes: 0 success, 1 usage error, 2 unreadable or
malformed input, 3 numerical failure.
"""

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
from contextlib import contextmanager

import numpy as np
from PIL import Image

from fittsground import __version__
from fittsground.errors import DataError, NumericalError
from fittsground.data import SynthConfig, generate_corpus, write_corpus, read_corpus, parse_annotations, \
    iou_filter, write_filter_outputs, records_to_label_inputs
from fittsground.labels import gaussian_label_map, uniform_label_map, peak_patch, suppression_mask_batch, \
    write_label_file, read_label_file, DEFAULT_EPSILON
from fittsground.nn import TrainConfig, train, evaluate, split_indices, save_params, load_params, \
    run_ablation_matrix, render_ablation_table, write_ablation_report
from fittsground.stats import MODES, GAMMA_DEFAULT, format_table, write_predictions_csv, suppression_mass_report

logger = logging.getLogger('fittsground')

OUT_ENV = 'FITTSGROUND_OUT'

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


################################################################################
# output handling
################################################################################

def _out(args) -> str:
    out = args.out or os.environ.get(OUT_ENV)
    if not out:
        raise UsageError(f'no output location: pass --out or set ${OUT_ENV}')
    return out


@contextmanager
def _staged_dir(out: str):
    """Yield a temporary directory that replaces (or is merged into) `out` only if the block succeeds."""
    out = os.path.abspath(out)
    parent = os.path.dirname(out)
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix='.' + os.path.basename(out) + '-', dir=parent)
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if not os.path.isdir(out):
        os.replace(tmp, out)
        return
    for name in os.listdir(tmp):
        dst = os.path.join(out, name)
        if os.path.isdir(dst):
            shutil.rmtree(dst)
        os.replace(os.path.join(tmp, name), dst)
    os.rmdir(tmp)


@contextmanager
def _staged_file(out: str):
    out = os.path.abspath(out)
    os.makedirs(os.path.dirname(out), exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix='.' + os.path.basename(out) + '-', dir=os.path.dirname(out))
    os.close(fd)
    try:
        yield tmp
    except BaseException:
        os.remove(tmp)
        raise
    os.replace(tmp, out)


def _dump(path: str, obj):
    with open(path, 'w') as f:
        json.dump(obj, f, indent=2, sort_keys=True)


################################################################################
# subcommands; each returns (summary, human-readable table)
################################################################################

def _safe_name(image_id: str) -> str:
    return ''.join(c if c.isalnum() or c in '-_.' else '_' for c in image_id) or 'record'


def cmd_gen_labels(args):
    out = _out(args)
    records, errors = parse_annotations(args.annotations)
    entries = []
    with _staged_dir(out) as tmp:
        os.makedirs(os.path.join(tmp, 'labels'))
        for n, (image_id, grid, box) in enumerate(records_to_label_inputs(records, args.patch_size)):
            if args.kind == 'gaussian':
                label = gaussian_label_map(grid, box, args.sigma_factor, args.epsilon)
            else:
                label = uniform_label_map(grid, box)
            name = f'{n:06d}_{_safe_name(image_id)}.{args.format}'
            write_label_file(os.path.join(tmp, 'labels', name), label.values, grid.shape, args.format)
            entries.append({'image_id': image_id, 'file': f'labels/{name}', 'shape': list(grid.shape),
                            'peak_patch': peak_patch(label.values), 'total': float(np.sum(label.values))})
        manifest = {'kind': args.kind, 'patch_size': args.patch_size, 'format': args.format,
                    'sigma_factor': args.sigma_factor if args.kind == 'gaussian' else None,
                    'epsilon': args.epsilon if args.kind == 'gaussian' else None,
                    'annotations': os.path.abspath(args.annotations),
                    'malformed_lines': [e.line for e in errors], 'labels': entries}
        _dump(os.path.join(tmp, 'manifest.json'), manifest)

    summary = {'command': 'gen-labels', 'out': out, 'kind': args.kind, 'records': len(entries),
               'malformed_lines': [e.line for e in errors]}
    table = format_table(['image_id', 'file', 'peak patch'],
                         [[e['image_id'], e['file'], e['peak_patch']] for e in entries])
    return summary, table


def cmd_filter(args):
    out = _out(args)
    records, errors = parse_annotations(args.annotations)
    kept, dropped = iou_filter(records, args.threshold)
    with _staged_dir(out) as tmp:
        stats = write_filter_outputs(kept, dropped, tmp, errors, args.threshold)
    summary = dict(stats, command='filter', out=out)
    rows = [['kept', stats['kept']]] + [[f'dropped ({k})', v] for k, v in stats['drop_reasons'].items()]
    rows.append(['malformed lines', len(stats['malformed_lines'])])
    return summary, format_table(['records', 'count'], rows)


def cmd_synth(args):
    out = _out(args)
    config = SynthConfig(image_width=args.image_size, image_height=args.image_size, patch_size=args.patch_size,
                         n_elements=args.elements, feature_dim=args.feature_dim, query_dim=args.query_dim,
                         noise=args.noise, max_iou=args.max_iou, seed=args.seed)
    corpus = generate_corpus(config, args.scenes)
    with _staged_dir(out) as tmp:
        write_corpus(corpus, tmp)

    classes, counts = np.unique(corpus.size_classes, return_counts=True)
    size_counts = {str(c): int(n) for c, n in zip(classes, counts)}
    summary = {'command': 'synth', 'out': out, 'scenes': len(corpus), 'seed': config.seed,
               'grid': list(corpus.grid.shape), 'size_classes': size_counts}
    return summary, format_table(['size class', 'scenes'], sorted(size_counts.items()))


def _add_train_options(p):
    d = TrainConfig()
    p.add_argument('--corpus', required=True, help='corpus directory written by synth')
    p.add_argument('--lr', type=float, default=d.learning_rate, help='SGD step size')
    p.add_argument('--batch-size', type=int, default=d.batch_size)
    p.add_argument('--epochs', type=int, default=d.epochs)
    p.add_argument('--lambda1', type=float, default=d.lambda1, help='suppression loss weight')
    p.add_argument('--lambda2', type=float, default=d.lambda2, help='KL loss weight')
    p.add_argument('--sigma-factor', type=float, default=d.sigma_factor)
    p.add_argument('--epsilon', type=float, default=d.epsilon)
    p.add_argument('--kind', choices=('gaussian', 'uniform'), default=d.label_kind, help='label kind')
    p.add_argument('--no-suppression', action='store_true', help='disable the suppression loss')
    p.add_argument('--seed', type=int, default=d.seed)
    p.add_argument('--eval-fraction', type=float, default=d.eval_fraction)
    p.add_argument('--hidden-dim', type=int, default=d.hidden_dim)
    p.add_argument('--embed-dim', type=int, default=d.embed_dim)


def _train_config(args) -> TrainConfig:
    return TrainConfig(learning_rate=args.lr, batch_size=args.batch_size, epochs=args.epochs, lambda1=args.lambda1,
                       lambda2=args.lambda2, sigma_factor=args.sigma_factor, epsilon=args.epsilon,
                       label_kind=args.kind, suppression=not args.no_suppression, seed=args.seed,
                       eval_fraction=args.eval_fraction, hidden_dim=args.hidden_dim, embed_dim=args.embed_dim)


def cmd_train(args):
    out = _out(args)
    config = _train_config(args)
    corpus = read_corpus(args.corpus)
    params, log = train(config, corpus, progress=args.progress, verbosity=max(args.verbose - 1, 0))
    logger.info('training took %.1fs', log.wall_time)

    with _staged_dir(out) as tmp:
        save_params(os.path.join(tmp, 'head'), params,
                    config.head_config(corpus.feats.shape[-1], corpus.queries.shape[-1]), config.to_dict())
        log.checkpoint = 'head.bin'
        log.write_jsonl(os.path.join(tmp, 'train_log.jsonl'))
        record = {k: v for k, v in log.to_dict().items() if k != 'wall_time'}
        _dump(os.path.join(tmp, 'train_log.json'), dict(record, config=config.to_dict(), corpus=corpus.manifest))

    final = log.epochs[-1] if log.epochs else log.initial
    summary = {'command': 'train', 'out': out, 'checkpoint': os.path.join(out, 'head.bin'),
               'epochs': config.epochs, 'final_loss': log.losses[-1] if log.losses else None,
               'initial_eval_accuracy': log.initial['eval_accuracy'], 'eval_accuracy': final['eval_accuracy'],
               'eval_suppression_mass': final['eval_suppression_mass']}
    rows = [[e['epoch'], f"{e['total']:.5f}", f"{e['l_sup']:.5f}", f"{e['l_attn']:.5f}",
             f"{100 * e['eval_accuracy']:.1f}"] for e in log.epochs]
    return summary, format_table(['epoch', 'loss', 'l_sup', 'l_attn', 'eval acc.'], rows)


def cmd_eval(args):
    out = _out(args)
    params, sidecar = load_params(args.checkpoint)
    corpus = read_corpus(args.corpus)
    head = sidecar['head']
    if (head['feature_dim'], head['query_dim']) != (corpus.feats.shape[-1], corpus.queries.shape[-1]):
        raise DataError(f"checkpoint expects d_v={head['feature_dim']}, d_q={head['query_dim']}, corpus has "
                        f'd_v={corpus.feats.shape[-1]}, d_q={corpus.queries.shape[-1]}')
    if args.split == 'eval':
        fraction = (sidecar.get('hyperparameters') or {}).get('eval_fraction', TrainConfig.eval_fraction)
        corpus = corpus.subset(split_indices(len(corpus), fraction)[1])

    report, probs, points = evaluate(params, corpus, args.mode, args.gamma)
    masks = suppression_mask_batch(corpus.grid, corpus.targets)
    suppression = suppression_mass_report(probs, masks)
    with _staged_dir(out) as tmp:
        _dump(os.path.join(tmp, 'report.json'), dict(report.to_dict(), suppression_mass=suppression))
        write_predictions_csv(os.path.join(tmp, 'predictions.csv'), list(corpus), points)
        if args.dump_attention:
            os.makedirs(os.path.join(tmp, 'attention'))
            for i in range(min(args.dump_attention, len(corpus))):
                write_label_file(os.path.join(tmp, 'attention', f'{_safe_name(corpus.image_ids[i])}.csv'),
                                 probs[i], corpus.grid.shape)

    summary = dict(report.to_dict(), command='eval', out=out, split=args.split, suppression_mass=suppression)
    return summary, report.render() + f"\nsuppression mass: {suppression['mean']:.4f}"


def cmd_ablate(args):
    out = _out(args)
    base = _train_config(args)
    corpus = read_corpus(args.corpus)
    with _staged_dir(out) as tmp:
        report = run_ablation_matrix(base, corpus, args.seeds, args.sigma_factors, tmp, args.progress)
        write_ablation_report(report, tmp)
    summary = {'command': 'ablate', 'out': out, 'seeds': report['seeds'],
               'reference_cell': report['reference_cell'],
               'sigma_order': report['sigma_sweep']['observed_order'],
               'cells': {c['name']: {'overall': c['overall']['mean'], 'std': c['overall']['std'],
                                     'delta': c['delta_overall'],
                                     'suppression_mass': c['suppression_mass']['mean']}
                         for c in report['cells']}}
    return summary, render_ablation_table(report)


def heatmap_pixels(values: np.ndarray, scale: int = 16) -> np.ndarray:
    """
    Blue-to-red colour coding of an H x W patch map over [0, max], upscaled by pixel replication.
    :returns: (H * scale) x (W * scale) x 3 uint8 array
    """
    values = np.asarray(values, dtype=np.float64)
    if np.any(values < 0):
        raise DataError('patch map has negative entries')
    top = values.max()
    t = values / top if top > 0 else np.zeros_like(values)
    red = np.round(255 * t).astype(np.uint8)
    rgb = np.stack([red, np.zeros_like(red), 255 - red], axis=-1)
    return np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)


def cmd_heatmap(args):
    out = _out(args)
    if args.scale < 1:
        raise UsageError(f'--scale must be at least 1, got {args.scale}')
    values = read_label_file(args.label_file)
    pixels = heatmap_pixels(values, args.scale)
    with _staged_file(out) as tmp:
        Image.fromarray(pixels).save(tmp, format='PPM')
    summary = {'command': 'heatmap', 'out': out, 'shape': list(values.shape), 'max': float(values.max()),
               'peak_patch': peak_patch(values.ravel())}
    return summary, format_table(['patch map', 'rows', 'cols', 'max'],
                                 [[args.label_file, values.shape[0], values.shape[1], f'{values.max():.6g}']])


################################################################################
# parser
################################################################################

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', default=None, help=f'output location (default: ${OUT_ENV})')
    common.add_argument('--pretty', action='store_true', help='print a human-readable table instead of JSON')
    common.add_argument('-v', '--verbose', action='count', default=0,
                        help='debug logging; repeat to trace the jitted training step')
    common.add_argument('--progress', action='store_true', help='show progress bars')

    parser = _Parser(prog='fittsground', description='coordinate-free GUI grounding with Fitts-Gaussian labels')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    p = sub.add_parser('gen-labels', parents=[common], help='patch labels for annotated boxes')
    p.add_argument('--annotations', required=True, help='JSONL annotation file')
    p.add_argument('--patch-size', type=float, default=16.)
    p.add_argument('--sigma-factor', type=float, default=1.)
    p.add_argument('--epsilon', type=float, default=DEFAULT_EPSILON)
    p.add_argument('--kind', choices=('gaussian', 'uniform'), default='gaussian')
    p.add_argument('--format', choices=('csv', 'bin'), default='csv')
    p.set_defaults(func=cmd_gen_labels)

    p = sub.add_parser('filter', parents=[common], help='IoU filter of annotations against parser boxes')
    p.add_argument('--annotations', required=True, help='JSONL annotation file')
    p.add_argument('--threshold', type=float, default=0.3)
    p.set_defaults(func=cmd_filter)

    d = SynthConfig()
    p = sub.add_parser('synth', parents=[common], help='generate a synthetic grounding corpus')
    p.add_argument('--scenes', type=int, default=500)
    p.add_argument('--seed', type=int, default=d.seed)
    p.add_argument('--image-size', type=int, default=d.image_width)
    p.add_argument('--patch-size', type=int, default=d.patch_size)
    p.add_argument('--elements', type=int, default=d.n_elements)
    p.add_argument('--feature-dim', type=int, default=d.feature_dim)
    p.add_argument('--query-dim', type=int, default=d.query_dim)
    p.add_argument('--noise', type=float, default=d.noise)
    p.add_argument('--max-iou', type=float, default=d.max_iou)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser('train', parents=[common], help='train the grounding head')
    _add_train_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('eval', parents=[common], help='element accuracy of a checkpoint')
    p.add_argument('--checkpoint', required=True, help='checkpoint written by train')
    p.add_argument('--corpus', required=True)
    p.add_argument('--mode', choices=MODES, default='argmax')
    p.add_argument('--gamma', type=float, default=GAMMA_DEFAULT)
    p.add_argument('--split', choices=('eval', 'all'), default='eval')
    p.add_argument('--dump-attention', type=int, default=0, metavar='N',
                   help='write the attention maps of the first N samples')
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser('ablate', parents=[common], help='label / suppression / sigma ablation matrix')
    _add_train_options(p)
    p.add_argument('--seeds', type=int, default=5)
    p.add_argument('--sigma-factors', type=float, nargs='+', default=[0.5, 1., 6.])
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser('heatmap', parents=[common], help='render a label or attention file as PPM')
    p.add_argument('--label-file', required=True)
    p.add_argument('--scale', type=int, default=16, help='pixels per patch')
    p.set_defaults(func=cmd_heatmap)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f'fittsground: error: {e}', file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        summary, table = args.func(args)
    except UsageError as e:
        print(f'fittsground {args.command}: error: {e}', file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as e:
        logger.error('numerical failure: %s', e)
        return EXIT_NUMERICAL
    except (DataError, OSError) as e:
        logger.error('%s', e)
        return EXIT_DATA
    except ValueError as e:
        print(f'fittsground {args.command}: error: {e}', file=sys.stderr)
        return EXIT_USAGE

    print(table if args.pretty else json.dumps(summary, sort_keys=True))
    return EXIT_OK
