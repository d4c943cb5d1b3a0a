"""LiDAR sequence preparation for single-step occupancy prediction.

Frames go through ground removal, range clipping and projection onto the
x-y plane, are subsampled to a common cardinality with farthest point
sampling, and are paired under one of three formulations:

* ``P2P``: cloud at t to cloud at t+1
* ``P2D``: cloud at t to the rowwise difference x(t+1) - x(t)
* ``D2D``: difference at t to difference at t+1

Rows of two frames are matched by Hilbert rank. Coordinates are snapped to
a dyadic lattice before differencing, which makes differences exact: adding
a P2D target back onto its base reproduces the next frame bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cloud_core import DEFAULT_ORDER, as_cloud, fps_indices, hilbert_sort
from .errors import DomainError
from .hilbert_codec import CurveConfig
from .metrics import chamfer, emd
from .ot_sinkhorn import EXACT_EMD_MAX_N

METHODOLOGIES = ("P2P", "P2D", "D2D")
FRAMES_NEEDED = {"P2P": 2, "P2D": 2, "D2D": 3}
SNAP_QUANTUM = 2.0**-30
GROUND_Z_MIN = -1.5
CLIP_RANGE = 30.0
CELL_SIZE = 0.5


@dataclass(frozen=True)
class Frame:
    cloud: np.ndarray
    t: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cloud", as_cloud(self.cloud))

    def __len__(self):
        return len(self.cloud)

    @property
    def dims(self) -> int:
        return self.cloud.shape[1]

    def with_cloud(self, cloud) -> "Frame":
        return Frame(cloud, self.t)


def check_sequence(frames: Sequence[Frame]) -> None:
    for a, b in zip(frames, frames[1:]):
        if b.t <= a.t:
            raise DomainError(f"frame timestamps must increase, got {a.t} then {b.t}")


def snap(points, quantum: float = SNAP_QUANTUM) -> np.ndarray:
    """Round coordinates to multiples of a power-of-two ``quantum``.

    Scaling by a power of two is exact, so the only rounding is the explicit
    one. Differences of snapped values below 2**22 in magnitude are exact.
    """
    pc = np.asarray(points, dtype=np.float64)
    return np.round(pc / quantum) * quantum


def project_xy(f: Frame) -> Frame:
    if f.dims != 3:
        raise DomainError(f"projection needs a 3-D frame, got d={f.dims}")
    return f.with_cloud(f.cloud[:, :2].copy())


GroundPredicate = Callable[[np.ndarray], np.ndarray]


def height_above(z_min: float) -> GroundPredicate:
    return lambda pc: pc[:, 2] > z_min


def remove_ground(f: Frame, z_min: float = GROUND_Z_MIN,
                  predicate: GroundPredicate | None = None) -> Frame:
    """Drop ground returns. ``predicate`` maps the (n, 3) cloud to a keep
    mask; the default keeps points strictly above ``z_min``."""
    if f.dims != 3:
        raise DomainError(f"ground removal needs a 3-D frame, got d={f.dims}")
    keep = np.asarray((predicate or height_above(z_min))(f.cloud), dtype=bool)
    if keep.shape != (len(f),):
        raise DomainError(f"ground predicate returned shape {keep.shape}, expected ({len(f)},)")
    return f.with_cloud(f.cloud[keep])


def clip_range(f: Frame, r: float = CLIP_RANGE) -> Frame:
    """Keep points with |x| <= r and |y| <= r."""
    if not r > 0:
        raise DomainError(f"clip range must be positive, got {r}")
    xy = f.cloud[:, :2]
    return f.with_cloud(f.cloud[np.all(np.abs(xy) <= r, axis=1)])


def normalize_cardinality(frames: Sequence[Frame], n: int, seed: int = 0) -> list[Frame]:
    """FPS-subsample every frame to exactly ``n`` points with the same seed."""
    if n < 1:
        raise DomainError(f"target cardinality must be positive, got {n}")
    out = []
    for f in frames:
        if len(f) < n:
            raise DomainError(f"frame {f.t} has {len(f)} points, fewer than n={n}")
        out.append(f.with_cloud(f.cloud[fps_indices(f.cloud, n, seed)]))
    return out


@dataclass(frozen=True)
class PreprocessConfig:
    z_min: float = GROUND_Z_MIN
    clip: float = CLIP_RANGE


def preprocess(f: Frame, cfg: PreprocessConfig = PreprocessConfig()) -> Frame:
    """snap, remove_ground, clip_range, project_xy."""
    f = f.with_cloud(snap(f.cloud))
    return project_xy(clip_range(remove_ground(f, cfg.z_min), cfg.clip))


@dataclass(frozen=True)
class TrainingPair:
    """``input`` and ``target`` hold clouds or differences depending on the
    methodology; ``base`` is always the cloud at t."""

    methodology: str
    input: np.ndarray
    target: np.ndarray
    base: np.ndarray
    t: int
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "methodology": self.methodology,
            "t": self.t,
            "n": len(self.base),
            **self.meta,
            "base": self.base,
            "input": self.input,
            "target": self.target,
        }


def _ordered(f: Frame, cfg: CurveConfig) -> np.ndarray:
    return hilbert_sort(snap(f.cloud), cfg)[0]


def make_pair(frames: Sequence[Frame], methodology: str, n: int | None = None,
              seed: int = 0, order: int = DEFAULT_ORDER) -> TrainingPair:
    """Build a training pair from 2 (P2P, P2D) or 3 (D2D) consecutive frames.

    With ``n`` given, frames are first subsampled to ``n`` points; otherwise
    they must already share a cardinality. The pair is anchored at the
    second-to-last frame, so the last frame is always the prediction target.
    """
    if methodology not in METHODOLOGIES:
        raise DomainError(f"unknown methodology {methodology!r}; expected one of {METHODOLOGIES}")
    frames = list(frames)
    if len(frames) != FRAMES_NEEDED[methodology]:
        raise DomainError(f"{methodology} needs {FRAMES_NEEDED[methodology]} frames, got {len(frames)}")
    check_sequence(frames)
    if len({f.dims for f in frames}) != 1:
        raise DomainError("frames differ in dimension")
    if n is not None:
        frames = normalize_cardinality(frames, n, seed)
    if len({len(f) for f in frames}) != 1:
        raise DomainError(f"frames differ in cardinality: {[len(f) for f in frames]}")
    if len(frames[0]) == 0:
        raise DomainError("frames are empty")
    cfg = CurveConfig(frames[0].dims, order)
    clouds = [_ordered(f, cfg) for f in frames]
    base, nxt = clouds[-2], clouds[-1]
    delta = nxt - base
    if methodology == "P2P":
        inp, target = base, nxt
    elif methodology == "P2D":
        inp, target = base, delta
    else:
        inp, target = base - clouds[0], delta
    meta = {"seed": seed, "order": order}
    return TrainingPair(methodology, inp, target, base, frames[-2].t, meta)


def compose_prediction(delta, base) -> np.ndarray:
    """Turn a predicted difference back into a cloud: delta + base."""
    d = np.asarray(delta, dtype=np.float64)
    b = np.asarray(base, dtype=np.float64)
    if d.shape != b.shape or d.ndim != 2:
        raise DomainError(f"difference {d.shape} and base {b.shape} do not match")
    return d + b


@dataclass(frozen=True)
class OccupancyGrid:
    """Boolean raster; ``cells[i, j]`` covers x bin i and y bin j, measured
    from ``origin`` (the minimum corner)."""

    cells: np.ndarray
    cell_size: float
    origin: tuple[float, float]

    @property
    def shape(self):
        return self.cells.shape

    def occupied(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in np.argwhere(self.cells)}

    def to_pgm(self) -> str:
        """Plain (P2) graymap; 0 free, 255 occupied, top row = largest y."""
        image = self.cells.T[::-1]
        h, w = image.shape
        body = "\n".join(" ".join("255" if v else "0" for v in row) for row in image)
        return f"P2\n{w} {h}\n255\n{body}\n"

    def sidecar(self) -> dict:
        return {
            "cell_size": self.cell_size,
            "origin": list(self.origin),
            "extent": -self.origin[0],
            "shape": list(self.cells.shape),
            "layout": "pgm rows run from max y to min y; columns from min x to max x",
        }


def rasterize(points, cell_size: float = CELL_SIZE, extent: float = CLIP_RANGE) -> OccupancyGrid:
    """Occupancy over [-extent, extent]^2.

    Bins are floor((v + extent) / cell_size); points on the upper boundary
    fall in the last bin and points outside the square are ignored.
    """
    if not cell_size > 0 or not extent > 0:
        raise DomainError(f"cell_size and extent must be positive, got {cell_size}, {extent}")
    pc = as_cloud(points, dims=(2,)) if len(np.asarray(points)) else np.zeros((0, 2))
    side = int(np.ceil(2 * extent / cell_size))
    cells = np.zeros((side, side), dtype=bool)
    inside = np.all(np.abs(pc) <= extent, axis=1)
    idx = np.floor((pc[inside] + extent) / cell_size).astype(np.int64)
    idx = np.clip(idx, 0, side - 1)
    cells[idx[:, 0], idx[:, 1]] = True
    return OccupancyGrid(cells, float(cell_size), (-float(extent), -float(extent)))


def evaluate_prediction(pred, truth) -> tuple[float, float]:
    """(Chamfer, EMD); EMD is exact up to 64 points and Sinkhorn above."""
    pred = as_cloud(pred, dims=None)
    truth = as_cloud(truth, dims=None)
    mode = "exact" if len(pred) <= EXACT_EMD_MAX_N else "sinkhorn"
    return chamfer(pred, truth), emd(pred, truth, mode)
