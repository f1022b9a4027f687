################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np

import jax
import jax.numpy as jnp

import haiku as hk

from fittsground.errors import NumericalError
from fittsground.geom import PatchGrid


@dataclass(frozen=True)
class HeadConfig:
    """Dimensions of the grounding head.

    :param feature_dim: patch feature dimension d_v
    :param query_dim: query embedding dimension d_q
    :param hidden_dim: hidden width d_h of both projection MLPs
    :param embed_dim: shared embedding dimension d of the scoring step
    :param seed: initialization seed
    """

    feature_dim: int = 16
    query_dim: int = 16
    hidden_dim: int = 32
    embed_dim: int = 32
    seed: int = 0

    def __post_init__(self):
        for name in ('feature_dim', 'query_dim', 'hidden_dim', 'embed_dim'):
            if getattr(self, name) < 1:
                raise ValueError(f'{name} must be at least 1, got {getattr(self, name)}')

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> 'HeadConfig':
        return cls(**d)

    @classmethod
    def from_params(cls, params: hk.Params, seed: int = 0) -> 'HeadConfig':
        """Recover the dimensions from an existing parameter set."""
        W1_t = params[f'{_HEAD}/~/mlp_t']['W1']
        W2_t = params[f'{_HEAD}/~/mlp_t']['W2']
        W_Q = params[f'{_HEAD}/~/self_attention']['W_Q']
        return cls(W_Q.shape[0], W1_t.shape[1], W1_t.shape[0], W2_t.shape[0], seed)


_HEAD = 'grounding_head'


def _uniform_init(fan_in: int) -> hk.initializers.Initializer:
    bound = 1. / np.sqrt(fan_in)
    return hk.initializers.RandomUniform(-bound, bound)


class SelfAttention(hk.Module):
    """
    Single-head scaled dot-product self-attention over patch features with a residual connection:
        out_i = v_i + sum_j softmax_j(<W_Q v_i, W_K v_j> / sqrt(d_v)) W_V v_j
    """

    def __init__(self, name=None):
        super().__init__(name=name)

    def __call__(self, v: jnp.ndarray) -> jnp.ndarray:
        """
        :param v: patch features with shape M * d_v
        :return: contextualized features with shape M * d_v
        """
        d_v = v.shape[-1]
        init = _uniform_init(d_v)
        W_Q = hk.get_parameter('W_Q', [d_v, d_v], dtype=v.dtype, init=init)
        W_K = hk.get_parameter('W_K', [d_v, d_v], dtype=v.dtype, init=init)
        W_V = hk.get_parameter('W_V', [d_v, d_v], dtype=v.dtype, init=init)

        q = v @ W_Q.T
        k = v @ W_K.T
        val = v @ W_V.T

        A = jax.nn.softmax(q @ k.T / np.sqrt(d_v), axis=-1)
        return v + A @ val


class ProjectionMLP(hk.Module):
    """Two-layer perceptron x -> W2 tanh(W1 x + b1) + b2."""

    def __init__(self, hidden_size: int, output_size: int, name=None):
        """
        :param hidden_size: width of the hidden layer
        :param output_size: dimension of the output embedding
        """
        super().__init__(name=name)
        self.hidden_size = hidden_size
        self.output_size = output_size

    def __call__(self, x: jnp.ndarray) -> jnp.ndarray:
        n_in = x.shape[-1]
        W1 = hk.get_parameter('W1', [self.hidden_size, n_in], dtype=x.dtype, init=_uniform_init(n_in))
        b1 = hk.get_parameter('b1', [self.hidden_size], dtype=x.dtype, init=_uniform_init(n_in))
        W2 = hk.get_parameter('W2', [self.output_size, self.hidden_size], dtype=x.dtype,
                              init=_uniform_init(self.hidden_size))
        b2 = hk.get_parameter('b2', [self.output_size], dtype=x.dtype, init=_uniform_init(self.hidden_size))

        h = jnp.tanh(x @ W1.T + b1)
        return h @ W2.T + b2


class GroundingHead(hk.Module):
    """
    Coordinate-free grounding head: patch features are contextualized by self-attention, query and patches are
    projected into a shared d-dimensional space by separate MLPs, and the attention over patches is the softmax of
    the scaled dot products <z, z_i> / sqrt(d).
    """

    def __init__(self, hidden_size: int, embed_size: int, name=_HEAD):
        """
        :param hidden_size: hidden width of both projection MLPs
        :param embed_size: shared embedding dimension d
        """
        super().__init__(name=name)
        self.embed_size = embed_size
        self.attn = SelfAttention(name='self_attention')
        self.mlp_t = ProjectionMLP(hidden_size, embed_size, name='mlp_t')
        self.mlp_v = ProjectionMLP(hidden_size, embed_size, name='mlp_v')

    def contextualize(self, feats: jnp.ndarray) -> jnp.ndarray:
        return self.attn(feats)

    def logits(self, feats: jnp.ndarray, query: jnp.ndarray) -> jnp.ndarray:
        """
        :param feats: patch features with shape M * d_v
        :param query: query embedding with shape d_q
        :return: attention scores alpha with shape M
        """
        z = self.mlp_t(query)
        z_i = self.mlp_v(self.contextualize(feats))
        return z_i @ z / np.sqrt(self.embed_size)

    def __call__(self, feats: jnp.ndarray, query: jnp.ndarray) -> jnp.ndarray:
        # max-subtracted softmax
        return jax.nn.softmax(self.logits(feats, query))


@lru_cache(maxsize=None)
def build_head(hidden_dim: int, embed_dim: int) -> hk.MultiTransformed:
    """
    Pure functions of the head. The returned apply functions are (contextualize, logits, probs) and take
    the parameters as first argument.
    """

    def f():
        head = GroundingHead(hidden_dim, embed_dim)

        def init(feats, query):
            return head(feats, query)

        return init, (head.contextualize, head.logits, head)

    return hk.without_apply_rng(hk.multi_transform(f))


def network_for(params: hk.Params) -> hk.MultiTransformed:
    config = HeadConfig.from_params(params)
    return build_head(config.hidden_dim, config.embed_dim)


def init_params(config: HeadConfig) -> hk.Params:
    """Initialize all weights and biases uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)] (seeded)."""
    net = build_head(config.hidden_dim, config.embed_dim)
    feats = jnp.zeros((1, config.feature_dim))
    query = jnp.zeros((config.query_dim,))
    return net.init(jax.random.PRNGKey(config.seed), feats, query)


@dataclass(frozen=True, eq=False)
class AttentionMap:
    """Probability distribution over the patches of a grid."""

    grid: PatchGrid
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, 'probs', probs)
        if probs.shape != (self.grid.size,):
            raise ValueError(f'attention vector of shape {probs.shape} does not match grid with {self.grid.size} '
                             f'patches')
        if np.any(probs < 0) or abs(probs.sum() - 1.) > 1e-9:
            raise ValueError('attention map must be non-negative and sum to 1')


def _check_dims(params: hk.Params, feats, query=None):
    config = HeadConfig.from_params(params)
    feats = jnp.asarray(feats)
    if feats.ndim != 2 or feats.shape[1] != config.feature_dim:
        raise ValueError(f'patch features must have shape M x {config.feature_dim}, got {feats.shape}')
    if query is None:
        return feats
    query = jnp.asarray(query)
    if query.shape != (config.query_dim,):
        raise ValueError(f'query embedding must have shape ({config.query_dim},), got {query.shape}')
    return feats, query


def contextualize(params: hk.Params, feats) -> jnp.ndarray:
    """
    Self-attention contextualization of patch features (with residual connection).
    :arg params: head parameters
    :arg feats: M x d_v patch features
    :returns: M x d_v contextualized features
    """
    feats = _check_dims(params, feats)
    return network_for(params).apply[0](params, feats)


def logits(params: hk.Params, feats, query) -> jnp.ndarray:
    feats, query = _check_dims(params, feats, query)
    return network_for(params).apply[1](params, feats, query)


def attention_forward(params: hk.Params, feats, query, grid: PatchGrid) -> AttentionMap:
    """
    Attention map of the head for one sample.
    :arg params: head parameters
    :arg feats: M x d_v patch features (M = grid.size)
    :arg query: d_q query embedding
    :arg grid: patch grid of the sample
    :returns: attention map
    """
    feats, query = _check_dims(params, feats, query)
    if feats.shape[0] != grid.size:
        raise ValueError(f'{feats.shape[0]} patch features for a grid with {grid.size} patches')
    net = network_for(params)
    alpha = net.apply[1](params, feats, query)
    if not bool(jnp.all(jnp.isfinite(alpha))):
        raise NumericalError('non-finite attention scores')
    probs = jax.nn.softmax(alpha)
    return AttentionMap(grid, np.asarray(probs))


def backward(params: hk.Params, feats, query, upstream) -> hk.Params:
    """
    Vector-Jacobian product of the attention map w.r.t. all head parameters.
    :arg params: head parameters
    :arg feats: M x d_v patch features
    :arg query: d_q query embedding
    :arg upstream: gradient of some scalar objective w.r.t. the M attention probabilities
    :returns: gradient of the objective w.r.t. params (same tree structure)
    """
    feats, query = _check_dims(params, feats, query)
    probs_fn = network_for(params).apply[2]
    _, vjp = jax.vjp(lambda p: probs_fn(p, feats, query), params)
    grads, = vjp(jnp.asarray(upstream, dtype=feats.dtype))
    return grads


def batched_probs(params: hk.Params, feats, queries) -> jnp.ndarray:
    """
    :arg feats: B x M x d_v stack of patch features on a common grid
    :arg queries: B x d_q query embeddings
    :returns: B x M attention maps
    """
    net = network_for(params)
    return _batched_probs(params, jnp.asarray(feats), jnp.asarray(queries), net)


def _batched_probs_impl(params, feats, queries, network):
    return jax.vmap(network.apply[2], (None, 0, 0))(params, feats, queries)


_batched_probs = jax.jit(_batched_probs_impl, static_argnames=['network'])
