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
Synthetic GUI scenes for training and evaluating the grounding head without a vision-language backbone.

Each scene places N axis-aligned elements on a canvas. Every element carries a random unit-norm identity vector;
patches it occupies (patch centre inside the element) receive that vector plus noise as feature, all other patches
receive pure noise. The query embedding is a fixed linear image of the target's identity (plus noise), so the head
has to match query and patch identities to find the target. Patches an element only grazes stay unpainted, so
every patch carrying the target identity decodes to a click on the target.

Random numbers come from numpy's PCG64 bit generator seeded with SeedSequence((seed, stream tag, index)); a scene
is a deterministic function of (config, index).
"""

import json
import logging
import os
from dataclasses import dataclass, asdict, field
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from fittsground.errors import DataError
from fittsground.geom import BoundingBox, PatchGrid, iou, element_mask

logger = logging.getLogger(__name__)

SIZE_CLASSES = ('small', 'medium', 'large')
CATEGORIES = ('icon', 'text')

MAX_PLACEMENT_ATTEMPTS = 1000


@dataclass(frozen=True)
class SynthConfig:
    """
    :param image_width: canvas width (pixels)
    :param image_height: canvas height (pixels)
    :param patch_size: patch side s (pixels)
    :param n_elements: elements per scene (target included)
    :param small: side-length range [lo, hi) of small elements (pixels)
    :param medium: side-length range of medium elements
    :param large: side-length range of large elements
    :param feature_dim: patch feature dimension d_v
    :param query_dim: query embedding dimension d_q
    :param noise: feature/query noise level
    :param max_iou: maximal pairwise IoU between elements
    :param class_weights: sampling weights of the target size classes
    :param seed: corpus seed
    """

    image_width: int = 256
    image_height: int = 256
    patch_size: int = 16
    n_elements: int = 5
    small: Tuple[float, float] = (16., 32.)
    medium: Tuple[float, float] = (32., 64.)
    large: Tuple[float, float] = (64., 112.)
    feature_dim: int = 16
    query_dim: int = 16
    noise: float = 0.1
    max_iou: float = 0.3
    class_weights: Tuple[float, float, float] = (1., 1., 1.)
    seed: int = 0

    def __post_init__(self):
        for name in ('small', 'medium', 'large', 'class_weights'):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.n_elements < 1:
            raise ValueError(f'n_elements must be at least 1, got {self.n_elements}')
        if self.noise < 0:
            raise ValueError(f'noise must be non-negative, got {self.noise}')
        if not 0 <= self.max_iou <= 1:
            raise ValueError(f'max_iou must lie in [0, 1], got {self.max_iou}')
        if self.feature_dim < 1 or self.query_dim < 1:
            raise ValueError('feature_dim and query_dim must be at least 1')
        if len(self.class_weights) != 3 or min(self.class_weights) < 0 or sum(self.class_weights) <= 0:
            raise ValueError(f'invalid class weights {self.class_weights}')
        # fails on invalid image/patch sizes
        PatchGrid(self.image_width, self.image_height, self.patch_size)

        limit = min(self.image_width, self.image_height)
        prev_hi = 0.
        for name in SIZE_CLASSES:
            lo, hi = getattr(self, name)
            if not 0 < lo < hi:
                raise ValueError(f'{name} size range must satisfy 0 < lo < hi, got ({lo}, {hi})')
            if hi > limit:
                raise ValueError(f'{name} elements (up to {hi}px) do not fit a {self.image_width}x'
                                 f'{self.image_height} image')
            if lo < prev_hi:
                raise ValueError('size ranges must be ordered and disjoint (small < medium < large)')
            prev_hi = hi

    @property
    def grid(self) -> PatchGrid:
        return PatchGrid(self.image_width, self.image_height, self.patch_size)

    def size_range(self, size_class: str) -> Tuple[float, float]:
        return getattr(self, size_class)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> 'SynthConfig':
        return cls(**d)


@dataclass(frozen=True, eq=False)
class GroundingSample:
    """One grounding instance: patch features and query embedding with exactly one target box."""

    grid: PatchGrid
    feats: np.ndarray
    query: np.ndarray
    target: BoundingBox
    distractors: List[BoundingBox] = field(default_factory=list)
    size_class: str = 'medium'
    category: str = 'icon'
    image_id: str = ''


def _rng(*words) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(w) for w in words])))


def query_projection(config: SynthConfig) -> np.ndarray:
    """Corpus-wide d_q x d_v matrix mapping identity vectors to query embeddings."""
    rng = _rng(config.seed, 0x51)
    return rng.standard_normal((config.query_dim, config.feature_dim)) / np.sqrt(config.feature_dim)


def target_size_class(config: SynthConfig, index: int) -> str:
    """
    Size class of the target of scene `index`. With equal class weights every block of three consecutive scenes
    holds each class exactly once (in seeded random order); otherwise classes are drawn independently.
    """
    w = np.asarray(config.class_weights)
    if np.all(w == w[0]):
        order = _rng(config.seed, 0xB1, index // 3).permutation(3)
        return SIZE_CLASSES[order[index % 3]]
    return SIZE_CLASSES[_rng(config.seed, 0xB2, index).choice(3, p=w / w.sum())]


def _draw_box(rng: np.random.Generator, config: SynthConfig, size_class: str) -> BoundingBox:
    lo, hi = config.size_range(size_class)
    w, h = rng.uniform(lo, hi, size=2)
    x1 = rng.uniform(0, config.image_width - w)
    y1 = rng.uniform(0, config.image_height - h)
    return BoundingBox(x1, y1, x1 + w, y1 + h)


def _place_elements(rng: np.random.Generator, config: SynthConfig, target_class: str) -> List[BoundingBox]:
    """Rejection-sample element boxes (target first) with pairwise IoU <= max_iou."""
    boxes, attempts = [], 0
    while len(boxes) < config.n_elements:
        if attempts >= MAX_PLACEMENT_ATTEMPTS:
            raise DataError(f'could not place {config.n_elements} elements with IoU <= {config.max_iou} after '
                            f'{MAX_PLACEMENT_ATTEMPTS} attempts; use fewer or smaller elements')
        attempts += 1
        size_class = target_class if not boxes else SIZE_CLASSES[rng.integers(3)]
        b = _draw_box(rng, config, size_class)
        if all(iou(b, other) <= config.max_iou for other in boxes):
            boxes.append(b)
    return boxes


def generate_scene(config: SynthConfig, index: int) -> GroundingSample:
    """
    Generate scene `index` of the corpus described by config.
    :arg config: generator configuration
    :arg index: scene index (>= 0)
    :returns: grounding sample
    """
    if index < 0:
        raise ValueError(f'scene index must be non-negative, got {index}')
    grid = config.grid
    size_class = target_size_class(config, index)

    rng = _rng(config.seed, 0x5C, index)
    boxes = _place_elements(rng, config, size_class)
    identities = rng.standard_normal((len(boxes), config.feature_dim))
    identities /= np.linalg.norm(identities, axis=1, keepdims=True)

    feats = config.noise * rng.standard_normal((grid.size, config.feature_dim))
    # painter's order with the target on top
    for n in list(range(1, len(boxes))) + [0]:
        covered = element_mask(grid, boxes[n])
        feats[covered] = identities[n] + config.noise * rng.standard_normal((int(covered.sum()), config.feature_dim))

    query = query_projection(config) @ identities[0] + config.noise * rng.standard_normal(config.query_dim)

    target = boxes[0]
    category = 'text' if target.width >= 2 * target.height else 'icon'
    return GroundingSample(grid, feats, query, target, boxes[1:], size_class, category, f'scene-{index:06d}')


class Corpus(object):
    """
    Collection of grounding samples on a common grid, held as stacked arrays.
    """

    def __init__(self, grid: PatchGrid, feats: np.ndarray, queries: np.ndarray, targets: np.ndarray,
                 distractors: Sequence[np.ndarray], size_classes: Sequence[str], categories: Sequence[str],
                 image_ids: Sequence[str], manifest: dict = None):
        """
        :arg grid: common patch grid
        :arg feats: N x M x d_v patch features
        :arg queries: N x d_q query embeddings
        :arg targets: N x 4 target boxes
        :arg distractors: N arrays (k x 4) of distractor boxes
        :arg size_classes: N size class names
        :arg categories: N category names
        :arg image_ids: N sample identifiers
        :arg manifest: generation manifest (config echo, seed, count)
        """
        assert feats.shape[:2] == (len(targets), grid.size)
        assert len(queries) == len(targets) == len(size_classes) == len(categories) == len(distractors)
        self.grid = grid
        self.feats = feats
        self.queries = queries
        self.targets = targets
        self.distractors = list(distractors)
        self.size_classes = np.asarray(size_classes)
        self.categories = np.asarray(categories)
        self.image_ids = list(image_ids)
        self.manifest = manifest or {}

    @classmethod
    def from_samples(cls, samples: Sequence[GroundingSample], manifest: dict = None) -> 'Corpus':
        if not samples:
            raise ValueError('corpus needs at least one sample')
        grid = samples[0].grid
        if any(s.grid != grid for s in samples):
            raise ValueError('all samples of a corpus must share one patch grid')
        return cls(grid,
                   np.stack([s.feats for s in samples]),
                   np.stack([s.query for s in samples]),
                   np.asarray([s.target.to_list() for s in samples]),
                   [np.asarray([d.to_list() for d in s.distractors]).reshape(-1, 4) for s in samples],
                   [s.size_class for s in samples],
                   [s.category for s in samples],
                   [s.image_id for s in samples],
                   manifest)

    def __len__(self):
        return len(self.targets)

    def __getitem__(self, i: int) -> GroundingSample:
        return GroundingSample(self.grid, self.feats[i], self.queries[i], BoundingBox(*self.targets[i]),
                               [BoundingBox(*d) for d in self.distractors[i]], str(self.size_classes[i]),
                               str(self.categories[i]), self.image_ids[i])

    def __iter__(self) -> Iterator[GroundingSample]:
        return (self[i] for i in range(len(self)))

    def subset(self, indices) -> 'Corpus':
        indices = np.asarray(indices, dtype=int)
        return Corpus(self.grid, self.feats[indices], self.queries[indices], self.targets[indices],
                      [self.distractors[i] for i in indices], self.size_classes[indices], self.categories[indices],
                      [self.image_ids[i] for i in indices], self.manifest)


def iter_scenes(config: SynthConfig, count: int) -> Iterator[GroundingSample]:
    """Stream scenes 0..count-1."""
    for index in range(count):
        yield generate_scene(config, index)


def make_manifest(config: SynthConfig, count: int) -> dict:
    return {'format': CORPUS_FORMAT, 'config': config.to_dict(), 'seed': config.seed, 'count': count}


def generate_corpus(config: SynthConfig, count: int) -> Corpus:
    """
    Generate scenes 0..count-1 together with their manifest (config echo, seed, count).
    """
    if count < 1:
        raise ValueError(f'count must be at least 1, got {count}')
    return Corpus.from_samples(list(iter_scenes(config, count)), make_manifest(config, count))


def regenerate(manifest: dict) -> Corpus:
    """Rebuild a corpus from its manifest."""
    return generate_corpus(SynthConfig.from_dict(manifest['config']), manifest['count'])


################################################################################
# on-disk layout
################################################################################

CORPUS_FORMAT = 'fittsground-corpus/1'
RECORD_MAGIC = b'FGS1'

RECORD_LAYOUT = (
    'little-endian; magic "FGS1"; uint32[6] = (H, W, d_v, d_q, k, size_class | category << 8); '
    'float64[3] = (image_width, image_height, patch_size); float64[4] target (x1, y1, x2, y2); '
    'float64[k*4] distractors; float64[H*W*d_v] features (row-major patches); float64[d_q] query; '
    'size_class 0/1/2 = small/medium/large, category 0/1 = icon/text'
)

_U32 = np.dtype('<u4')
_F64 = np.dtype('<f8')


def encode_record(sample: GroundingSample) -> bytes:
    grid = sample.grid
    k = len(sample.distractors)
    codes = SIZE_CLASSES.index(sample.size_class) | CATEGORIES.index(sample.category) << 8
    header = np.asarray([grid.rows, grid.cols, sample.feats.shape[1], sample.query.shape[0], k, codes], dtype=_U32)
    floats = np.concatenate([
        [grid.image_width, grid.image_height, grid.patch_size],
        sample.target.to_list(),
        np.asarray([d.to_list() for d in sample.distractors], dtype=np.float64).ravel(),
        np.asarray(sample.feats, dtype=np.float64).ravel(),
        np.asarray(sample.query, dtype=np.float64).ravel(),
    ]).astype(_F64)
    return RECORD_MAGIC + header.tobytes() + floats.tobytes()


def decode_record(raw: bytes, image_id: str = '') -> GroundingSample:
    if raw[:4] != RECORD_MAGIC or len(raw) < 28:
        raise DataError(f'{image_id}: not a corpus record')
    H, W, d_v, d_q, k, codes = (int(v) for v in np.frombuffer(raw[4:28], dtype=_U32))
    if (len(raw) - 28) % _F64.itemsize:
        raise DataError(f'{image_id}: truncated record')
    floats = np.frombuffer(raw[28:], dtype=_F64)
    n_expected = 3 + 4 + 4 * k + H * W * d_v + d_q
    if floats.size != n_expected:
        raise DataError(f'{image_id}: record holds {floats.size} values, expected {n_expected}')
    size_code, category_code = codes & 0xFF, codes >> 8
    if size_code >= len(SIZE_CLASSES) or category_code >= len(CATEGORIES):
        raise DataError(f'{image_id}: invalid size class / category code {codes:#x}')

    try:
        grid = PatchGrid(*floats[:3])
        o = 3
        target = BoundingBox(*floats[o:o + 4])
        o += 4
        distractors = [BoundingBox(*d) for d in floats[o:o + 4 * k].reshape(k, 4)]
    except ValueError as e:
        raise DataError(f'{image_id}: invalid geometry in record ({e})') from e
    if grid.shape != (H, W):
        raise DataError(f'{image_id}: grid dimensions inconsistent with header')
    o += 4 * k
    feats = floats[o:o + H * W * d_v].reshape(H * W, d_v).copy()
    o += H * W * d_v
    query = floats[o:].copy()
    if not (np.all(np.isfinite(feats)) and np.all(np.isfinite(query))):
        raise DataError(f'{image_id}: non-finite features or query')
    return GroundingSample(grid, feats, query, target, distractors, SIZE_CLASSES[size_code],
                           CATEGORIES[category_code], image_id)


def write_corpus(corpus: Corpus, directory: str):
    """
    Write manifest.json and one binary record per sample (records/<image_id>.bin) to directory.
    """
    os.makedirs(os.path.join(directory, 'records'), exist_ok=True)
    for sample in corpus:
        with open(os.path.join(directory, 'records', f'{sample.image_id}.bin'), 'wb') as f:
            f.write(encode_record(sample))
    manifest = dict(corpus.manifest, count=len(corpus), image_ids=corpus.image_ids, record_layout=RECORD_LAYOUT)
    manifest.setdefault('format', CORPUS_FORMAT)
    with open(os.path.join(directory, 'manifest.json'), 'w') as f:
        json.dump(manifest, f, indent=2)


def read_corpus(directory: str) -> Corpus:
    """Load a corpus written by write_corpus."""
    path = os.path.join(directory, 'manifest.json')
    try:
        with open(path) as f:
            manifest = json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f'{path}: malformed manifest ({e})') from e
    if not isinstance(manifest, dict) or manifest.get('format') != CORPUS_FORMAT:
        found = manifest.get('format') if isinstance(manifest, dict) else type(manifest).__name__
        raise DataError(f'{path}: unsupported corpus format {found!r}')
    image_ids = manifest.get('image_ids')
    if not isinstance(image_ids, list) or not image_ids or not all(isinstance(i, str) for i in image_ids):
        raise DataError(f'{path}: manifest lacks a non-empty list of image_ids')

    samples = []
    for image_id in image_ids:
        with open(os.path.join(directory, 'records', f'{image_id}.bin'), 'rb') as f:
            samples.append(decode_record(f.read(), image_id))
    manifest = {k: v for k, v in manifest.items() if k not in ('image_ids', 'record_layout')}
    logger.debug('read %d samples from %s', len(samples), directory)
    try:
        return Corpus.from_samples(samples, manifest)
    except ValueError as e:
        # mixed grids or feature dimensions across records
        raise DataError(f'{directory}: inconsistent records ({e})') from e
