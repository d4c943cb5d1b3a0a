"""Hilbert and Morton (Z-order) codecs between grid cells and curve indices.

The Hilbert kernels follow Skilling's transpose formulation: coordinates are
converted in place to the "transposed" Hilbert index with Gray-code and
reflection steps, then the transposed bits are interleaved into one integer.
No recursion is involved. Index 0 is the all-zeros cell and the order-1
2-D curve visits (0,0) -> (0,1) -> (1,1) -> (1,0).

Scalar functions take and return plain Python ints. The ``*_many`` variants
operate on an (n, d) array of cells at once; they use uint64 arithmetic when
the index fits in 64 bits and Python ints (object arrays) otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError

MAX_INDEX_BITS = 128


@dataclass(frozen=True)
class CurveConfig:
    """Grid dimensionality and curve order (bits per axis)."""

    dims: int
    order: int

    def __post_init__(self):
        if int(self.dims) != self.dims or self.dims < 1:
            raise ConfigError(f"dims must be a positive integer, got {self.dims!r}")
        if int(self.order) != self.order or self.order < 1:
            raise ConfigError(f"order must be a positive integer, got {self.order!r}")
        if self.dims * self.order > MAX_INDEX_BITS:
            raise ConfigError(
                f"dims*order = {self.dims * self.order} exceeds {MAX_INDEX_BITS} index bits"
            )

    @property
    def side(self) -> int:
        return 1 << self.order

    @property
    def index_bits(self) -> int:
        return self.dims * self.order

    @property
    def n_cells(self) -> int:
        return 1 << self.index_bits

    @property
    def fits_uint64(self) -> bool:
        return self.index_bits <= 64


def _check_cell(coords: Sequence[int], cfg: CurveConfig) -> list[int]:
    if len(coords) != cfg.dims:
        raise DomainError(f"expected {cfg.dims} coordinates, got {len(coords)}")
    out = []
    for c in coords:
        c = int(c)
        if c < 0 or c >= cfg.side:
            raise DomainError(f"coordinate {c} outside [0, {cfg.side})")
        out.append(c)
    return out


def _check_index(index: int, cfg: CurveConfig) -> int:
    index = int(index)
    if index < 0 or index >= cfg.n_cells:
        raise DomainError(f"index {index} outside [0, 2**{cfg.index_bits})")
    return index


# Transpose kernels. ``X`` is a list with one entry per axis; entries are
# Python ints or equally shaped integer arrays, so the same code serves the
# scalar and the vectorised paths.

def _axes_to_transpose(X: list, order: int) -> list:
    d = len(X)
    vector = isinstance(X[0], np.ndarray)
    Q = 1 << (order - 1)
    while Q > 1:
        P = Q - 1
        for i in range(d):
            if vector:
                hit = (X[i] & Q) != 0
                if i == 0:
                    X[0] = np.where(hit, X[0] ^ P, X[0])
                else:
                    t = (X[0] ^ X[i]) & P
                    X[0] = np.where(hit, X[0] ^ P, X[0] ^ t)
                    X[i] = np.where(hit, X[i], X[i] ^ t)
            elif X[i] & Q:
                X[0] ^= P
            else:
                t = (X[0] ^ X[i]) & P
                X[0] ^= t
                X[i] ^= t
        Q >>= 1
    for i in range(1, d):
        X[i] = X[i] ^ X[i - 1]
    t = X[0] * 0
    Q = 1 << (order - 1)
    while Q > 1:
        if vector:
            t = np.where((X[d - 1] & Q) != 0, t ^ (Q - 1), t)
        elif X[d - 1] & Q:
            t ^= Q - 1
        Q >>= 1
    return [x ^ t for x in X]


def _transpose_to_axes(X: list, order: int) -> list:
    d = len(X)
    vector = isinstance(X[0], np.ndarray)
    N = 2 << (order - 1)
    t = X[d - 1] >> 1
    for i in range(d - 1, 0, -1):
        X[i] = X[i] ^ X[i - 1]
    X[0] = X[0] ^ t
    Q = 2
    while Q != N:
        P = Q - 1
        for i in range(d - 1, -1, -1):
            if vector:
                hit = (X[i] & Q) != 0
                if i == 0:
                    X[0] = np.where(hit, X[0] ^ P, X[0])
                else:
                    t = (X[0] ^ X[i]) & P
                    X[0] = np.where(hit, X[0] ^ P, X[0] ^ t)
                    X[i] = np.where(hit, X[i], X[i] ^ t)
            elif X[i] & Q:
                X[0] ^= P
            else:
                t = (X[0] ^ X[i]) & P
                X[0] ^= t
                X[i] ^= t
        Q <<= 1
    return X


def _pack_transpose(X: list, order: int):
    # Axis 0 supplies the most significant bit of every d-bit group.
    h = X[0] * 0
    for j in range(order - 1, -1, -1):
        for x in X:
            h = (h << 1) | ((x >> j) & 1)
    return h


def _unpack_transpose(h, dims: int, order: int) -> list:
    X = [h * 0 for _ in range(dims)]
    shift = dims * order
    for j in range(order - 1, -1, -1):
        for i in range(dims):
            shift -= 1
            X[i] = X[i] | (((h >> shift) & 1) << j)
    return X


def hilbert_encode(coords: Sequence[int], cfg: CurveConfig) -> int:
    """Position of grid cell ``coords`` along the Hilbert curve."""
    X = _check_cell(coords, cfg)
    return _pack_transpose(_axes_to_transpose(X, cfg.order), cfg.order)


def hilbert_decode(index: int, cfg: CurveConfig) -> tuple[int, ...]:
    """Grid cell visited at position ``index`` of the Hilbert curve."""
    h = _check_index(index, cfg)
    X = _unpack_transpose(h, cfg.dims, cfg.order)
    return tuple(int(x) for x in _transpose_to_axes(X, cfg.order))


def morton_encode(coords: Sequence[int], cfg: CurveConfig) -> int:
    """Bit-interleaved index; bit j of axis k lands at bit j*dims + k."""
    X = _check_cell(coords, cfg)
    h = 0
    for j in range(cfg.order):
        for k, x in enumerate(X):
            h |= ((x >> j) & 1) << (j * cfg.dims + k)
    return h


def morton_decode(index: int, cfg: CurveConfig) -> tuple[int, ...]:
    h = _check_index(index, cfg)
    X = [0] * cfg.dims
    for j in range(cfg.order):
        for k in range(cfg.dims):
            X[k] |= ((h >> (j * cfg.dims + k)) & 1) << j
    return tuple(X)


# Vectorised paths

def _cells_array(cells, cfg: CurveConfig) -> np.ndarray:
    cells = np.asarray(cells)
    if cells.ndim != 2 or cells.shape[1] != cfg.dims:
        raise DomainError(f"expected an (n, {cfg.dims}) array of cells, got shape {cells.shape}")
    if not cells.size:
        return cells
    if cells.dtype == object:
        bad = any(int(c) < 0 or int(c) >= cfg.side for c in cells.ravel())
    elif np.issubdtype(cells.dtype, np.integer):
        bad = bool((cells < 0).any())
        if not bad and cfg.order < 64:
            bad = bool((cells.astype(np.uint64) >= np.uint64(cfg.side)).any())
    else:
        raise DomainError("cell coordinates must be integers")
    if bad:
        raise DomainError(f"cell coordinate outside [0, {cfg.side})")
    return cells


def _columns(cells: np.ndarray, cfg: CurveConfig) -> list:
    if cfg.fits_uint64:
        return [np.ascontiguousarray(cells[:, k]).astype(np.uint64) for k in range(cfg.dims)]
    return [np.array([int(c) for c in cells[:, k]], dtype=object) for k in range(cfg.dims)]


def _index_array(indices, cfg: CurveConfig) -> np.ndarray:
    if cfg.fits_uint64:
        idx = np.asarray(indices)
        if idx.dtype == object:
            idx = np.array([_check_index(i, cfg) for i in idx], dtype=np.uint64)
        else:
            if idx.size and (idx < 0).any():
                raise DomainError("negative curve index")
            idx = idx.astype(np.uint64)
            if cfg.index_bits < 64 and idx.size and (idx >= np.uint64(cfg.n_cells)).any():
                raise DomainError(f"index outside [0, 2**{cfg.index_bits})")
        return idx
    return np.array([_check_index(i, cfg) for i in np.asarray(indices, dtype=object).ravel()], dtype=object)


def hilbert_encode_many(cells, cfg: CurveConfig) -> np.ndarray:
    """Hilbert indices of an (n, d) array of cells.

    Returns uint64 when ``cfg.index_bits <= 64``, else an object array of ints.
    """
    cells = _cells_array(cells, cfg)
    if len(cells) == 0:
        return np.zeros(0, dtype=np.uint64 if cfg.fits_uint64 else object)
    X = _axes_to_transpose(_columns(cells, cfg), cfg.order)
    return _pack_transpose(X, cfg.order)


def hilbert_decode_many(indices, cfg: CurveConfig) -> np.ndarray:
    h = _index_array(indices, cfg)
    if len(h) == 0:
        return np.zeros((0, cfg.dims), dtype=np.uint64 if cfg.fits_uint64 else object)
    X = _transpose_to_axes(_unpack_transpose(h, cfg.dims, cfg.order), cfg.order)
    return np.stack(X, axis=1)


def morton_encode_many(cells, cfg: CurveConfig) -> np.ndarray:
    cells = _cells_array(cells, cfg)
    cols = _columns(cells, cfg)
    h = cols[0] * 0 if len(cells) else np.zeros(0, dtype=np.uint64 if cfg.fits_uint64 else object)
    for j in range(cfg.order):
        for k, x in enumerate(cols):
            h = h | (((x >> j) & 1) << (j * cfg.dims + k))
    return h


def morton_decode_many(indices, cfg: CurveConfig) -> np.ndarray:
    h = _index_array(indices, cfg)
    X = [h * 0 for _ in range(cfg.dims)]
    for j in range(cfg.order):
        for k in range(cfg.dims):
            X[k] = X[k] | (((h >> (j * cfg.dims + k)) & 1) << j)
    if len(h) == 0:
        return np.zeros((0, cfg.dims), dtype=h.dtype)
    return np.stack(X, axis=1)
