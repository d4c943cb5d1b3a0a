"""Point clouds, quantisation, Hilbert sorting and farthest point sampling.

A point cloud is an (n, d) float64 array. Functions here validate their
input with :func:`as_cloud` and never modify it in place.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyInputError
from .hilbert_codec import CurveConfig, hilbert_encode_many, morton_encode_many

DEFAULT_ORDER = 10
SCHEMES = ("hilbert", "morton", "lex")


def as_cloud(points, dims=(2, 3)) -> np.ndarray:
    """Validate and return ``points`` as an (n, d) float64 array.

    ``dims`` restricts the allowed dimensionality; pass ``None`` to accept any d >= 1.
    """
    pc = np.asarray(points, dtype=np.float64)
    if pc.ndim != 2:
        raise DomainError(f"point cloud must be a 2-D array, got shape {pc.shape}")
    if dims is not None and pc.shape[1] not in dims:
        raise DomainError(f"point dimension {pc.shape[1]} not in {tuple(dims)}")
    if pc.shape[1] < 1:
        raise DomainError("point dimension must be at least 1")
    if not np.isfinite(pc).all():
        raise DomainError("point cloud contains NaN or Inf")
    return pc


@dataclass(frozen=True)
class BoundingBox:
    lo: np.ndarray
    hi: np.ndarray

    @property
    def extent(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, pc: np.ndarray) -> bool:
        return bool(((pc >= self.lo) & (pc <= self.hi)).all())


def bounding_box(points) -> BoundingBox:
    pc = as_cloud(points, dims=None)
    if len(pc) == 0:
        raise EmptyInputError("bounding box of an empty cloud")
    return BoundingBox(pc.min(axis=0), pc.max(axis=0))


def quantize(points, bb: BoundingBox, cfg: CurveConfig) -> np.ndarray:
    """Map each axis of ``bb`` affinely onto grid cells 0 .. 2**order - 1.

    Rounds to nearest and clamps. Axes with zero extent map to cell 0.
    Returns uint64 cells when the order allows it, else Python ints.
    """
    pc = as_cloud(points, dims=None)
    if pc.shape[1] != cfg.dims:
        raise DomainError(f"cloud has d={pc.shape[1]} but curve has dims={cfg.dims}")
    if len(pc) and not bb.contains(pc):
        raise DomainError("point outside the bounding box")
    top = float(cfg.side - 1)
    extent = bb.extent
    flat = extent <= 0
    frac = np.where(flat, 0.0, (pc - bb.lo) / np.where(flat, 1.0, extent))
    scaled = np.floor(frac * top + 0.5)
    scaled = np.clip(scaled, 0.0, top)
    if cfg.order <= 63:
        cells = scaled.astype(np.uint64)
        return np.minimum(cells, np.uint64(cfg.side - 1))
    cells = np.array([min(int(v), cfg.side - 1) for v in scaled.ravel()], dtype=object)
    return cells.reshape(scaled.shape)


def _key_bytes(keys: np.ndarray, n_bytes: int) -> np.ndarray:
    """Little-endian byte digits of each key as an (n, n_bytes) uint8 array."""
    if keys.dtype == object:
        raw = b"".join(int(k).to_bytes(n_bytes, "little") for k in keys)
        return np.frombuffer(raw, dtype=np.uint8).reshape(len(keys), n_bytes)
    le = np.ascontiguousarray(keys, dtype="<u8")
    return le.view(np.uint8).reshape(len(keys), 8)[:, :n_bytes]


def radix_argsort(keys: np.ndarray, key_bits: int) -> np.ndarray:
    """Stable LSD radix argsort of non-negative integer keys, one byte per pass.

    Each pass is a bucket sort on one byte: elements are gathered bucket by
    bucket in their current order, which keeps every pass stable.
    """
    n = len(keys)
    order = np.arange(n, dtype=np.intp)
    if n < 2:
        return order
    n_bytes = max(1, (key_bits + 7) // 8)
    digits = _key_bytes(keys, n_bytes)
    for b in range(n_bytes):
        d = digits[order, b]
        counts = np.bincount(d, minlength=256)
        occupied = np.flatnonzero(counts)
        if len(occupied) == 1:
            continue
        order = np.concatenate([order[d == v] for v in occupied])
    return order


def _default_cfg(pc: np.ndarray, cfg: CurveConfig | None) -> CurveConfig:
    if cfg is None:
        return CurveConfig(pc.shape[1], DEFAULT_ORDER)
    if cfg.dims != pc.shape[1]:
        raise DomainError(f"cloud has d={pc.shape[1]} but curve has dims={cfg.dims}")
    return cfg


def curve_keys(points, scheme: str = "hilbert", cfg: CurveConfig | None = None) -> np.ndarray:
    """Curve index of every point after bounding-box quantisation."""
    pc = as_cloud(points)
    cfg = _default_cfg(pc, cfg)
    if len(pc) == 0:
        return np.zeros(0, dtype=np.uint64)
    cells = quantize(pc, bounding_box(pc), cfg)
    if scheme == "hilbert":
        return hilbert_encode_many(cells, cfg)
    if scheme == "morton":
        return morton_encode_many(cells, cfg)
    raise DomainError(f"no curve keys for scheme {scheme!r}")


def hilbert_sort(points, cfg: CurveConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Reorder a cloud along the Hilbert curve.

    Bounding box, quantisation onto the order-``cfg.order`` grid, one Hilbert
    index per point, then a stable radix sort of the indices. Returns the
    original (unquantised) points in curve order together with the
    permutation, so that ``sorted_pc == points[perm]``.
    """
    pc = as_cloud(points)
    cfg = _default_cfg(pc, cfg)
    keys = curve_keys(pc, "hilbert", cfg)
    perm = radix_argsort(keys, cfg.index_bits)
    return pc[perm], perm


def order_by(points, scheme: str = "hilbert", cfg: CurveConfig | None = None) -> np.ndarray:
    """Permutation ordering ``points`` by ``scheme`` (hilbert, morton or lex)."""
    pc = as_cloud(points)
    if scheme not in SCHEMES:
        raise DomainError(f"unknown ordering scheme {scheme!r}; expected one of {SCHEMES}")
    if scheme == "lex":
        # np.lexsort treats its last key as primary
        return np.lexsort(pc.T[::-1]).astype(np.intp)
    cfg = _default_cfg(pc, cfg)
    return radix_argsort(curve_keys(pc, scheme, cfg), cfg.index_bits)


def fps_indices(points, m: int, seed: int = 0) -> np.ndarray:
    """Greedy farthest point sampling; indices in selection order.

    The first index is a seeded uniform draw; ties in the farthest distance
    go to the lowest index.
    """
    pc = as_cloud(points, dims=None)
    n = len(pc)
    if m < 1 or m > n:
        raise DomainError(f"sample size m={m} outside [1, {n}]")
    rng = np.random.default_rng(seed)
    chosen = np.empty(m, dtype=np.intp)
    chosen[0] = rng.integers(n)
    nearest = np.sum((pc - pc[chosen[0]]) ** 2, axis=1)
    for k in range(1, m):
        nxt = int(np.argmax(nearest))
        chosen[k] = nxt
        np.minimum(nearest, np.sum((pc - pc[nxt]) ** 2, axis=1), out=nearest)
    return chosen


def fps_subsample(points, m: int, seed: int = 0) -> np.ndarray:
    pc = as_cloud(points, dims=None)
    return pc[fps_indices(pc, m, seed)]
