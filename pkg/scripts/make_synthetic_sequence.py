"""Write a synthetic LiDAR-like sequence as numbered XYZ frames.

The scene is a flat ground plane (z = -1.7, removed by the default ground
filter) plus a few box-shaped objects that translate by fixed per-object
velocities each frame. Velocities and spacings are dyadic, so exact
differences survive preprocessing.

    python scripts/make_synthetic_sequence.py out_seq --frames 5 --seed 0
    hilbertp2p occupancy-prep out_seq --methodology P2D --n 256 --out-dir pairs
"""
import argparse
import sys
from pathlib import Path

import numpy as np

from hilbertp2p.xyz_io import write_xyz


def scene(frames: int, objects: int, rng) -> list[np.ndarray]:
    grid = np.arange(-32.0, 32.0, 1.0)
    gx, gy = np.meshgrid(grid, grid)
    ground = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, -1.7)])
    shapes = []
    for _ in range(objects):
        corner = rng.integers(-24, 20, size=2).astype(float)
        size = rng.integers(3, 8, size=2)
        xs, ys, zs = np.meshgrid(np.arange(size[0]) * 0.5, np.arange(size[1]) * 0.5, [-1.0, -0.5, 0.0, 0.5, 1.0])
        pts = np.column_stack([xs.ravel(), ys.ravel(), zs.ravel()]) + [*corner, 0.0]
        velocity = rng.integers(-4, 5, size=2) * 0.125
        shapes.append((pts, np.array([*velocity, 0.0])))
    return [np.vstack([ground] + [p + t * v for p, v in shapes]) for t in range(frames)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir")
    ap.add_argument("--frames", type=int, default=5)
    ap.add_argument("--objects", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for t, pc in enumerate(scene(args.frames, args.objects, np.random.default_rng(args.seed))):
        write_xyz(out / f"{t:06d}.xyz", pc)
    print(f"wrote {args.frames} frames to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
