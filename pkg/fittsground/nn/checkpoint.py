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
import os

import numpy as np

import jax
import jax.numpy as jnp
import haiku as hk

from fittsground.errors import DataError
from .attention_head import HeadConfig, init_params

_DTYPE = np.dtype('<f8')


def _entries(params: hk.Params):
    for module in sorted(params):
        for name in sorted(params[module]):
            yield module, name, params[module][name]


def save_params(path: str, params: hk.Params, config: HeadConfig, hyperparameters: dict = None) -> str:
    """
    Write a checkpoint as a flat little-endian float64 file <path>.bin plus a JSON sidecar <path>.json recording
    shapes (in storage order), seed and hyperparameters.
    :arg path: checkpoint path without extension
    :returns: path of the binary file
    """
    entries = list(_entries(params))
    flat = np.concatenate([np.asarray(v, dtype=np.float64).ravel() for *_, v in entries])

    sidecar = {
        'format': 'fittsground-head/1',
        'dtype': _DTYPE.str,
        'entries': [{'module': m, 'name': n, 'shape': list(np.shape(v))} for m, n, v in entries],
        'seed': config.seed,
        'head': config.to_dict(),
        'hyperparameters': hyperparameters or {},
    }
    with open(path + '.bin', 'wb') as f:
        f.write(flat.astype(_DTYPE).tobytes())
    with open(path + '.json', 'w') as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
    return path + '.bin'


def _shapes(params) -> dict:
    return {m: {n: tuple(v.shape) for n, v in p.items()} for m, p in params.items()}


def _check_sidecar(sidecar, where: str) -> list:
    """Validate the sidecar layout; returns the entries as (module, name, shape) triples."""
    if not isinstance(sidecar, dict) or not isinstance(sidecar.get('entries'), list):
        raise DataError(f'{where}: checkpoint sidecar lacks an entries list')
    try:
        entries = [(str(e['module']), str(e['name']), tuple(int(n) for n in e['shape'])) for e in sidecar['entries']]
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f'{where}: malformed checkpoint entry ({e!r})') from e
    if any(n < 0 for *_, shape in entries for n in shape):
        raise DataError(f'{where}: negative dimension in checkpoint entry')
    return entries


def load_params(path: str):
    """
    Read a checkpoint written by save_params.
    :arg path: checkpoint path, with or without the .bin/.json extension
    :returns: parameters and the sidecar dictionary
    """
    base, ext = os.path.splitext(path)
    if ext not in ('.bin', '.json'):
        base = path
    with open(base + '.json') as f:
        try:
            sidecar = json.load(f)
        except json.JSONDecodeError as e:
            raise DataError(f'{base}.json: malformed checkpoint sidecar ({e})') from e
    entries = _check_sidecar(sidecar, base + '.json')
    try:
        config = HeadConfig.from_dict(sidecar['head'])
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f'{base}.json: invalid head configuration ({e!r})') from e
    if sidecar.get('dtype', _DTYPE.str) != _DTYPE.str:
        raise DataError(f"{base}.json: unsupported dtype {sidecar['dtype']!r}")
    with open(base + '.bin', 'rb') as f:
        raw = f.read()
    if len(raw) % _DTYPE.itemsize:
        raise DataError(f'{base}.bin: truncated parameter file')
    flat = np.frombuffer(raw, dtype=_DTYPE)

    expected = sum(int(np.prod(shape)) for *_, shape in entries)
    if flat.size != expected:
        raise DataError(f'{base}.bin: expected {expected} values, found {flat.size}')

    params, offset = {}, 0
    for module, name, shape in entries:
        n = int(np.prod(shape))
        params.setdefault(module, {})[name] = jnp.asarray(flat[offset:offset + n].reshape(shape), dtype=jnp.float64)
        offset += n

    if _shapes(params) != _shapes(jax.eval_shape(lambda: init_params(config))):
        raise DataError(f'{base}: parameter shapes do not match the recorded head {config.to_dict()}')
    return params, sidecar
