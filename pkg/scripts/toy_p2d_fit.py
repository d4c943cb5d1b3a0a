"""Fit a two-layer 1-D conv model to P2D targets by plain gradient descent.

Each training pair maps the Hilbert-sorted cloud at t to the rowwise
difference to t+1. The model sees (x, y) per point and predicts (dx, dy);
the loss is the mean squared error. This only exercises the blocks and the
tape end to end; it is not a benchmark.

    python scripts/toy_p2d_fit.py --steps 200
"""
import argparse
import sys

import numpy as np

from hilbertp2p.neural_blocks import tape
from hilbertp2p.neural_blocks.blocks import ConvSpec
from hilbertp2p.occupancy_pipeline import Frame, make_pair, preprocess

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from make_synthetic_sequence import scene  # noqa: E402


def model(x, p):
    h = tape.relu(tape.conv1d(x, p["c1.w"], p["c1.b"]))
    return tape.conv1d(h, p["c2.w"], p["c2.b"])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--lr", type=float, default=0.05)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--hidden", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    frames = [preprocess(Frame(pc, t)) for t, pc in enumerate(scene(4, 6, rng))]
    pairs = [make_pair(frames[t:t + 2], "P2D", args.n, seed=t) for t in range(3)]
    scale = 30.0
    params = {
        **{f"c1.{k}": v for k, v in ConvSpec.random(rng, 3, 2, args.hidden).params().items()},
        **{f"c2.{k}": v for k, v in ConvSpec.random(rng, 3, args.hidden, 2).params().items()},
    }
    for step in range(args.steps + 1):
        total = 0.0
        grads = {k: np.zeros_like(v) for k, v in params.items()}
        for pair in pairs:
            leaves = {k: tape.Tensor(v) for k, v in params.items()}
            err = tape.add(model(pair.input / scale, leaves), -pair.target)
            loss = tape.mul(tape.half_sum_squares(err), 2.0 / err.data.size)
            loss.backward()
            total += float(loss.data)
            for k in grads:
                grads[k] += leaves[k].grad
        if step % max(1, args.steps // 10) == 0:
            print(f"step {step:4d}  mse {total / len(pairs):.6f}")
        for k in params:
            params[k] = params[k] - args.lr * grads[k] / len(pairs)
    return 0


if __name__ == "__main__":
    sys.exit(main())
