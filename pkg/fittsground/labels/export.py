################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

import os

import numpy as np

from fittsground.errors import DataError

FORMATS = ('csv', 'bin')

_HEADER = np.dtype('<u4')
_VALUES = np.dtype('<f8')


def write_label_file(path, values, shape, fmt: str = 'csv'):
    """
    Write an H x W patch map (labels or attention).

    csv: H lines of W comma-separated values (row-major).
    bin: little-endian header (H, W as uint32) followed by H*W float64 values (row-major).
    :arg path: output file
    :arg values: length H*W vector
    :arg shape: (H, W)
    :arg fmt: 'csv' or 'bin'
    """
    H, W = shape
    values = np.asarray(values, dtype=np.float64).reshape(H, W)
    if fmt == 'csv':
        np.savetxt(path, values, fmt='%.17g', delimiter=',')
    elif fmt == 'bin':
        with open(path, 'wb') as f:
            f.write(np.asarray([H, W], dtype=_HEADER).tobytes())
            f.write(values.astype(_VALUES).tobytes())
    else:
        raise ValueError(f"unknown label file format '{fmt}', expected one of {FORMATS}")


def read_label_file(path) -> np.ndarray:
    """
    Read a patch map written by write_label_file (format inferred from the extension).
    :returns: H x W array
    """
    ext = os.path.splitext(str(path))[1].lower()
    try:
        if ext == '.csv':
            values = np.loadtxt(path, delimiter=',', dtype=np.float64, ndmin=2)
        elif ext == '.bin':
            with open(path, 'rb') as f:
                raw = f.read()
            if len(raw) < 8:
                raise DataError(f'{path}: truncated header')
            H, W = (int(v) for v in np.frombuffer(raw[:8], dtype=_HEADER))
            if len(raw) != 8 + 8 * H * W:
                raise DataError(f'{path}: expected {H}x{W} values, got {(len(raw) - 8) / 8:g}')
            values = np.frombuffer(raw[8:], dtype=_VALUES).reshape(H, W).astype(np.float64)
        else:
            raise DataError(f"{path}: unsupported extension '{ext}' (expected .csv or .bin)")
    except ValueError as e:
        if isinstance(e, DataError):
            raise
        raise DataError(f'{path}: malformed patch map ({e})') from e

    if values.size == 0 or not np.all(np.isfinite(values)):
        raise DataError(f'{path}: empty or non-finite patch map')
    return values
