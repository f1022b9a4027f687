################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

import json
import logging
import time
from dataclasses import dataclass, asdict, field
from functools import partial
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

import jax
import jax.numpy as jnp

import haiku as hk
import optax
from tqdm import tqdm

from fittsground.data.synth import Corpus
from fittsground.errors import NumericalError
from fittsground.geom import BoundingBox, Point
from fittsground.labels import gaussian_label_batch, uniform_label_batch, suppression_mask_batch
from fittsground.stats import decode_batch, size_stratified_report, suppression_mass_report, EvalReport, GAMMA_DEFAULT
from .attention_head import HeadConfig, build_head, init_params, batched_probs
from .losses import LossBreakdown, suppression_mass, kl_divergence

logger = logging.getLogger(__name__)

LABEL_KINDS = ('gaussian', 'uniform')


@dataclass(frozen=True)
class TrainConfig:
    """
    :param learning_rate: fixed SGD step size
    :param batch_size: samples per step
    :param epochs: passes over the training split
    :param lambda1: weight of the suppression loss
    :param lambda2: weight of the KL action loss
    :param sigma_factor: concentration of the Fitts-Gaussian labels
    :param epsilon: label normalization stabilizer
    :param label_kind: 'gaussian' or 'uniform'
    :param suppression: whether the suppression loss is active (lambda1 is ignored if not)
    :param seed: seed of parameter initialization and shuffle schedule
    :param eval_fraction: share of the corpus held out for evaluation (taken from the end)
    :param hidden_dim: hidden width of the projection MLPs
    :param embed_dim: shared embedding dimension d
    :param l_ntp: externally supplied language-model loss added to the reported total
    """

    learning_rate: float = 0.05
    batch_size: int = 32
    epochs: int = 30
    lambda1: float = 1.
    lambda2: float = 1.
    sigma_factor: float = 1.
    epsilon: float = 1e-6
    label_kind: str = 'gaussian'
    suppression: bool = True
    seed: int = 0
    eval_fraction: float = 0.2
    hidden_dim: int = 32
    embed_dim: int = 32
    l_ntp: float = 0.

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError(f'learning_rate must be non-negative, got {self.learning_rate}')
        if self.batch_size < 1:
            raise ValueError(f'batch_size must be at least 1, got {self.batch_size}')
        if self.epochs < 0:
            raise ValueError(f'epochs must be non-negative, got {self.epochs}')
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError(f'loss weights must be non-negative, got {self.lambda1}, {self.lambda2}')
        if not self.sigma_factor > 0:
            raise ValueError(f'sigma_factor must be positive, got {self.sigma_factor}')
        if self.epsilon < 0:
            raise ValueError(f'epsilon must be non-negative, got {self.epsilon}')
        if self.label_kind not in LABEL_KINDS:
            raise ValueError(f"label_kind must be one of {LABEL_KINDS}, got '{self.label_kind}'")
        if not 0 < self.eval_fraction < 1:
            raise ValueError(f'eval_fraction must lie in (0, 1), got {self.eval_fraction}')

    @property
    def effective_lambda1(self) -> float:
        return self.lambda1 if self.suppression else 0.

    def head_config(self, feature_dim: int, query_dim: int) -> HeadConfig:
        return HeadConfig(feature_dim, query_dim, self.hidden_dim, self.embed_dim, self.seed)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> 'TrainConfig':
        return cls(**d)


class TrainingState(NamedTuple):
    params: hk.Params
    opt_state: optax.OptState


@dataclass
class TrainLog:
    """Per-epoch mean loss components and held-out metrics."""

    epochs: List[dict] = field(default_factory=list)
    initial: dict = field(default_factory=dict)
    wall_time: float = 0.
    checkpoint: Optional[str] = None

    @property
    def losses(self) -> List[float]:
        return [e['total'] for e in self.epochs]

    def to_dict(self) -> dict:
        return asdict(self)

    def write_jsonl(self, path):
        """One JSON object per epoch."""
        with open(path, 'w') as f:
            for e in self.epochs:
                f.write(json.dumps(e) + '\n')


def label_targets(config: TrainConfig, corpus: Corpus) -> Tuple[np.ndarray, np.ndarray]:
    """
    Supervision for every sample of a corpus.
    :returns: N x M target distributions and N x M suppression masks
    """
    if config.label_kind == 'gaussian':
        targets = np.asarray(gaussian_label_batch(corpus.grid, corpus.targets, config.sigma_factor, config.epsilon))
    else:
        targets = uniform_label_batch(corpus.grid, corpus.targets)
    return targets, suppression_mask_batch(corpus.grid, corpus.targets)


def split_indices(n: int, eval_fraction: float) -> Tuple[np.ndarray, np.ndarray]:
    """Training indices and held-out indices (the trailing share of the corpus)."""
    n_eval = int(round(n * eval_fraction))
    if n_eval < 1 or n_eval >= n:
        logger.warning('corpus of %d samples too small for a held-out split, evaluating on the training data', n)
        idx = np.arange(n)
        return idx, idx
    return np.arange(n - n_eval), np.arange(n - n_eval, n)


def grounding_loss(params: hk.Params, feats: jnp.ndarray, queries: jnp.ndarray, targets: jnp.ndarray,
                   masks: jnp.ndarray, lambda1: float, lambda2: float, network: hk.MultiTransformed):
    """Batch mean of lambda1 * suppression mass + lambda2 * KL(target || attention).

    :param params: head parameters
    :param feats: B x M x d_v patch features
    :param queries: B x d_q query embeddings
    :param targets: B x M label distributions
    :param masks: B x M suppression masks
    :param lambda1: suppression weight
    :param lambda2: KL weight
    :param network: transformed grounding head
    :return: scalar loss and the batch means of both components
    """
    probs = jax.vmap(network.apply[2], (None, 0, 0))(params, feats, queries)
    l_sup = suppression_mass(probs, masks)
    l_attn = kl_divergence(targets, probs)
    return jnp.mean(lambda1 * l_sup + lambda2 * l_attn), (jnp.mean(l_sup), jnp.mean(l_attn))


@partial(jax.jit, static_argnames=['optimizer', 'network', 'verbosity'])
def update(state: TrainingState, feats: jnp.ndarray, queries: jnp.ndarray, targets: jnp.ndarray, masks: jnp.ndarray,
           lambda1: float, lambda2: float, optimizer: optax.GradientTransformation, network: hk.MultiTransformed,
           verbosity: int = 0):
    """Learning rule (stochastic gradient descent)

    :param state: current training state
    :param optimizer: optimizer (plain optax sgd)
    :param network: transformed grounding head
    :param verbosity: verbosity level between 0 and 2
    :return: updated training state, loss and its components (see grounding_loss for the remaining arguments)
    """
    (value, (l_sup, l_attn)), grads = jax.value_and_grad(grounding_loss, has_aux=True)(
        state.params, feats, queries, targets, masks, lambda1, lambda2, network)
    updates, opt_state = optimizer.update(grads, state.opt_state, state.params)

    if verbosity > 0:
        jax.debug.print('value: {}', value)
    if verbosity > 1:
        jax.debug.print("||grads_i||_inf: {}", jax.tree_util.tree_map(lambda a: jnp.max(jnp.abs(a)), grads))

    params = optax.apply_updates(state.params, updates)
    return TrainingState(params, opt_state), value, l_sup, l_attn


def predict(params: hk.Params, corpus: Corpus, mode: str = 'argmax', gamma: float = GAMMA_DEFAULT,
            batch_size: int = 256):
    """
    Attention maps and decoded click points for every sample of a corpus.
    :returns: N x M attention maps and N x 2 click points
    """
    probs = np.concatenate([np.asarray(batched_probs(params, corpus.feats[i:i + batch_size],
                                                     corpus.queries[i:i + batch_size]))
                            for i in range(0, len(corpus), batch_size)])
    return probs, decode_batch(corpus.grid, probs, mode, gamma)


def evaluate(params: hk.Params, corpus: Corpus, mode: str = 'argmax', gamma: float = GAMMA_DEFAULT) \
        -> Tuple[EvalReport, np.ndarray, List[Point]]:
    """Evaluation metric: element accuracy of the decoded clicks, overall and size-stratified

    :param params: head parameters
    :param corpus: evaluation samples
    :param mode: decode mode ('argmax' or 'threshold')
    :param gamma: confidence threshold for the threshold mode
    :return: report, attention maps and click points
    """
    probs, clicks = predict(params, corpus, mode, gamma)
    points = [Point(float(x), float(y)) for x, y in clicks]
    return size_stratified_report(list(corpus), points, mode, gamma), probs, points


def _held_out_metrics(params, corpus: Corpus, masks: np.ndarray) -> dict:
    report, probs, _ = evaluate(params, corpus)
    return {'eval_accuracy': report.overall,
            'eval_per_size': report.per_size,
            'eval_suppression_mass': suppression_mass_report(probs, masks)['mean']}


def train(config: TrainConfig, corpus: Corpus, progress: bool = False, verbosity: int = 0) \
        -> Tuple[hk.Params, TrainLog]:
    """
    Train the grounding head with plain SGD on the combined suppression / KL objective.

    The shuffle schedule and the initialization are fixed by config.seed, i.e., identical (config, corpus) yield
    identical parameters.
    :arg config: training configuration
    :arg corpus: synthetic corpus (non-empty); the trailing eval_fraction is held out
    :arg progress: show a progress bar over epochs
    :arg verbosity: verbosity level of the jitted update between 0 and 2
    :returns: final parameters and training log
    """
    if len(corpus) < 1:
        raise ValueError('cannot train on an empty corpus')
    start = time.perf_counter()

    train_idx, eval_idx = split_indices(len(corpus), config.eval_fraction)
    targets, masks = label_targets(config, corpus)
    eval_corpus, eval_masks = corpus.subset(eval_idx), masks[eval_idx]

    head = config.head_config(corpus.feats.shape[-1], corpus.queries.shape[-1])
    network = build_head(head.hidden_dim, head.embed_dim)
    optimizer = optax.sgd(config.learning_rate)
    params = init_params(head)
    state = TrainingState(params, optimizer.init(params))

    log = TrainLog(initial=_held_out_metrics(params, eval_corpus, eval_masks))
    lambda1, lambda2 = config.effective_lambda1, config.lambda2

    for epoch in tqdm(range(config.epochs), desc='epochs', disable=not progress):
        order = train_idx[np.random.default_rng([config.seed, epoch]).permutation(len(train_idx))]
        sums = np.zeros(3)
        for b, i in enumerate(range(0, len(order), config.batch_size)):
            batch = order[i:i + config.batch_size]
            state, value, l_sup, l_attn = update(state, corpus.feats[batch], corpus.queries[batch], targets[batch],
                                                 masks[batch], lambda1, lambda2, optimizer, network, verbosity)
            value, l_sup, l_attn = float(value), float(l_sup), float(l_attn)
            if not np.isfinite([value, l_sup, l_attn]).all():
                raise NumericalError('non-finite training loss', epoch=epoch, batch=b, l_sup=l_sup, l_attn=l_attn,
                                     total=value)
            sums += len(batch) * np.asarray([value, l_sup, l_attn])

        _, l_sup, l_attn = sums / len(order)
        breakdown = LossBreakdown(config.l_ntp, l_sup, l_attn, lambda1, lambda2,
                                  config.l_ntp + lambda1 * l_sup + lambda2 * l_attn)
        entry = dict(epoch=epoch, **breakdown.to_dict(), **_held_out_metrics(state.params, eval_corpus, eval_masks))
        log.epochs.append(entry)
        logger.info('epoch %d: total %.5f (sup %.5f, attn %.5f), eval accuracy %.3f, eval suppression mass %.4f',
                    epoch, entry['total'], l_sup, l_attn, entry['eval_accuracy'], entry['eval_suppression_mass'])

    log.wall_time = time.perf_counter() - start
    return state.params, log
