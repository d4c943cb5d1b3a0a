"""Command-line entry point.

Exit codes: 0 success, 2 bad arguments or unparsable input, 3 I/O failure,
4 numeric failure, 5 unmet precondition (for example too few frames).

``--config FILE`` reads a JSON object whose top-level keys override global
defaults and whose per-subcommand objects (keyed by subcommand name)
override that subcommand's defaults. Explicit flags still win.
``--print-config`` prints the resolved settings as JSON and exits.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import neural_blocks as nb
from .cloud_core import DEFAULT_ORDER, SCHEMES, hilbert_sort, order_by
from .errors import (
    ConvergenceError,
    DomainError,
    NumericError,
    NumericUnderflowError,
    PreconditionError,
)
from .hilbert_codec import CurveConfig
from .metrics import chamfer, compare_orderings, emd
from .neural_blocks import tape
from .occupancy_pipeline import (
    CELL_SIZE,
    CLIP_RANGE,
    FRAMES_NEEDED,
    GROUND_Z_MIN,
    METHODOLOGIES,
    Frame,
    PreprocessConfig,
    make_pair,
    preprocess,
    rasterize,
)
from .ot_sinkhorn import METRICS, SinkhornParams, sinkhorn_distance
from .xyz_io import (
    XYZParseError,
    atomic_write,
    dumps17,
    format_xyz,
    read_xyz,
    sequence_files,
    write_json,
)

EXIT_OK, EXIT_INPUT, EXIT_IO, EXIT_NUMERIC, EXIT_PRECONDITION = 0, 2, 3, 4, 5
UNLIMITED_ITERS = 2**62
GRADCHECK_TOL = {"conv1d": 1e-6}
GRADCHECK_DEFAULT_TOL = 1e-4


class CLIError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _emit(out: str, text: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        atomic_write(out, text)


def _emit_json(out: str, obj) -> None:
    _emit(out, dumps17(obj) + "\n")


def _require_inputs(*paths) -> None:
    for p in paths:
        if not Path(p).exists():
            raise CLIError(EXIT_IO, f"input {p} does not exist")


def _load_pair(a, b):
    _require_inputs(a, b)
    X, Y = read_xyz(a), read_xyz(b)
    if len(X) == 0 or len(Y) == 0:
        raise CLIError(EXIT_INPUT, "input clouds must be non-empty")
    if X.shape[1] != Y.shape[1]:
        raise CLIError(EXIT_INPUT, f"dimension mismatch: {a} has d={X.shape[1]}, {b} has d={Y.shape[1]}")
    return X, Y


# subcommands

def cmd_sort(args) -> int:
    _require_inputs(args.input)
    pc = read_xyz(args.input)
    if len(pc) == 0:
        raise CLIError(EXIT_INPUT, f"{args.input} holds no points")
    cfg = CurveConfig(pc.shape[1], args.order)
    if args.scheme == "hilbert":
        _, perm = hilbert_sort(pc, cfg)
    else:
        perm = order_by(pc, args.scheme, cfg)
    _emit(args.out, format_xyz(pc[perm]))
    if args.perm:
        atomic_write(args.perm, "".join(f"{int(i)}\n" for i in perm))
    return EXIT_OK


def _csv_float(v: float) -> str:
    return "nan" if v != v else format(v, ".17g")


def cmd_locality(args) -> int:
    _require_inputs(args.input)
    pc = read_xyz(args.input)
    if len(pc) < 2:
        raise CLIError(EXIT_PRECONDITION, "locality needs at least two points")
    report = compare_orderings(pc, CurveConfig(pc.shape[1], args.order))
    lines = ["scheme,mean_consecutive_distance,normalized_score"]
    lines += [f"{s},{_csv_float(m)},{_csv_float(z)}" for s, m, z in report.rows()]
    _emit(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_sinkhorn(args) -> int:
    X, Y = _load_pair(args.a, args.b)
    if args.iters == 0 and args.tol is None:
        raise CLIError(EXIT_INPUT, "--iters 0 (unlimited) needs --tol")
    if args.iters < 0:
        raise CLIError(EXIT_INPUT, "--iters must be >= 0")
    params = SinkhornParams(
        epsilon=args.epsilon,
        max_iters=args.iters or UNLIMITED_ITERS,
        tol=args.tol,
        log_domain=not args.multiplicative,
    )
    try:
        res = sinkhorn_distance(X, Y, params, args.metric)
    except NumericUnderflowError as exc:
        raise NumericUnderflowError(f"{exc}; on the command line, drop --multiplicative "
                                    "to use the log-domain solver") from None
    _emit_json(args.out, {
        "distance": res.distance,
        "transport_cost": res.transport_cost,
        "entropy": res.entropy,
        "iters": res.result.iters,
        "converged": res.result.converged,
        "marginal_violation": res.result.marginal_violation,
    })
    return EXIT_OK


def cmd_emd(args) -> int:
    X, Y = _load_pair(args.a, args.b)
    if len(X) != len(Y):
        raise CLIError(EXIT_INPUT, f"EMD needs equal cardinality, got {len(X)} and {len(Y)}")
    value = emd(X, Y, args.mode, metric=args.metric)
    _emit_json(args.out, {"emd": value, "mode": args.mode, "metric": args.metric, "n": len(X)})
    return EXIT_OK


def cmd_chamfer(args) -> int:
    X, Y = _load_pair(args.a, args.b)
    _emit_json(args.out, {"chamfer": chamfer(X, Y), "n_a": len(X), "n_b": len(Y)})
    return EXIT_OK


def cmd_occupancy_prep(args) -> int:
    _require_inputs(args.seq_dir)
    files = sequence_files(args.seq_dir)
    need = FRAMES_NEEDED[args.methodology]
    if len(files) < need:
        raise CLIError(EXIT_PRECONDITION,
                       f"{args.methodology} needs at least {need} frames, found {len(files)}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pre = PreprocessConfig(z_min=args.z_min, clip=args.clip)
    frames = []
    for t, path in files:
        pc = read_xyz(path)
        if pc.shape[1] != 3:
            raise CLIError(EXIT_INPUT, f"{path} is not a 3-D frame")
        frames.append(preprocess(Frame(pc, t), pre))
    short = [f.t for f in frames if len(f) < args.n]
    if short:
        raise CLIError(EXIT_PRECONDITION,
                       f"frames {short} keep fewer than n={args.n} points after preprocessing")

    outputs = {"pairs": [], "grids": []}
    for k in range(need - 1, len(frames)):
        window = frames[k - need + 1:k + 1]
        t = window[-2].t
        pair = make_pair(window, args.methodology, args.n, args.seed ^ t, args.order)
        name = f"pair_{t:06d}_{args.methodology}.json"
        write_json(out_dir / name, {**pair.to_dict(), "preprocess": {
            "z_min": args.z_min, "clip": args.clip, "projection": "xy"}})
        outputs["pairs"].append(name)
    if args.grids:
        for f in frames:
            grid = rasterize(f.cloud, args.cell_size, args.clip)
            stem = f"grid_{f.t:06d}"
            atomic_write(out_dir / f"{stem}.pgm", grid.to_pgm())
            write_json(out_dir / f"{stem}.json", grid.sidecar())
            outputs["grids"].append(f"{stem}.pgm")
    write_json(out_dir / "manifest.json", {
        "methodology": args.methodology,
        "n": args.n,
        "seed": args.seed,
        "pair_seed": "seed xor t",
        "order": args.order,
        "z_min": args.z_min,
        "clip": args.clip,
        "cell_size": args.cell_size,
        "frames": [f.t for f in frames],
        **outputs,
    })
    return EXIT_OK


def _gradcheck_case(block: str, n: int, c: int, rng):
    light = rng.normal(size=(n, c))
    if block == "conv1d":
        spec = nb.ConvSpec.random(rng, 3, c, c)
        return (lambda x, p: tape.conv1d(x, p["w"], p["b"])), spec.params()
    if block == "channel_attention":
        cfg = nb.CAConfig(c)
        return (lambda x, p: nb.channel_attention(x, p, cfg)), nb.init_ca(cfg, rng)
    if block == "mfa":
        cfg = nb.MFAConfig(c, c)
        return (lambda x, p: nb.mfa_forward(x, p, cfg)), nb.init_mfa(cfg, rng)
    if block == "bfa":
        cfg = nb.BFAConfig(c)
        return (lambda x, p: nb.bfa_forward(x, light, p, cfg)), nb.init_bfa(cfg, rng)
    if block == "aggregated":
        cfg = nb.AggregatedConfig(c, c)
        return (lambda x, p: nb.aggregated_forward(x, light, p, cfg)), nb.init_aggregated(cfg, rng)
    if block == "residual_unit":
        cfg = nb.ResUnitConfig(c)
        return (lambda x, p: nb.residual_unit(x, p, cfg)), nb.init_resunit(cfg, rng)
    cfg = nb.SepConvConfig(c, c)
    return (lambda x, p: nb.separable_conv1d(x, p, cfg)), nb.init_sepconv(cfg, rng)


GRADCHECK_BLOCKS = ("conv1d", "channel_attention", "mfa", "bfa", "aggregated",
                    "residual_unit", "separable_conv")


def cmd_gradcheck(args) -> int:
    if args.block not in GRADCHECK_BLOCKS:
        raise CLIError(EXIT_INPUT, f"unknown block {args.block!r}; choose from {', '.join(GRADCHECK_BLOCKS)}")
    settings = {"n": 8, "channels": 4, "step": 1e-5}
    if args.block_config:
        _require_inputs(args.block_config)
        extra = json.loads(Path(args.block_config).read_text())
        unknown = set(extra) - set(settings)
        if unknown:
            raise CLIError(EXIT_INPUT, f"unknown block config keys {sorted(unknown)}")
        settings.update(extra)
    rng = np.random.default_rng(args.seed)
    f, params = _gradcheck_case(args.block, int(settings["n"]), int(settings["channels"]), rng)
    x = rng.normal(size=(int(settings["n"]), int(settings["channels"])))
    err = nb.grad_check(f, params, x, step=float(settings["step"]))
    tol = GRADCHECK_TOL.get(args.block, GRADCHECK_DEFAULT_TOL)
    _emit_json(args.out, {
        "block": args.block,
        "max_relative_error": err,
        "tolerance": tol,
        "passed": bool(err <= tol),
        "seed": args.seed,
        **settings,
    })
    return EXIT_OK if err <= tol else EXIT_NUMERIC


# parser

class _Parser(argparse.ArgumentParser):
    """argparse with errors raised instead of printed, so main() owns exit codes."""

    def error(self, message):
        raise CLIError(EXIT_INPUT, f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hilbertp2p", description="Hilbert sorting, transport metrics and occupancy pairs.")
    p.add_argument("--seed", type=int, default=0, help="seed for sampling and parameter init")
    p.add_argument("--config", help="JSON file of default overrides")
    p.add_argument("--print-config", action="store_true", help="print resolved settings and exit")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("sort", help="reorder a cloud along a curve")
    s.add_argument("input")
    s.add_argument("--order", type=int, default=DEFAULT_ORDER)
    s.add_argument("--scheme", choices=SCHEMES, default="hilbert")
    s.add_argument("--out", default="-")
    s.add_argument("--perm", help="write the permutation here, one original index per line")
    s.set_defaults(func=cmd_sort)

    s = sub.add_parser("locality", help="compare ordering locality")
    s.add_argument("input")
    s.add_argument("--order", type=int, default=DEFAULT_ORDER)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_locality)

    s = sub.add_parser("sinkhorn", help="entropic transport distance between two clouds")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--epsilon", type=float, default=1e-3)
    s.add_argument("--iters", type=int, default=175, help="0 runs until --tol is met")
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--metric", choices=METRICS, default="sq_euclidean")
    s.add_argument("--multiplicative", action="store_true", help="use the plain scaling solver")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_sinkhorn)

    s = sub.add_parser("emd", help="earth mover's distance")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--mode", choices=("exact", "sinkhorn"), default="exact")
    s.add_argument("--exact", dest="mode", action="store_const", const="exact")
    s.add_argument("--metric", choices=METRICS, default="sq_euclidean")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_emd)

    s = sub.add_parser("chamfer", help="chamfer distance")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_chamfer)

    s = sub.add_parser("occupancy-prep", help="build training pairs and grids from a sequence")
    s.add_argument("seq_dir")
    s.add_argument("--methodology", choices=METHODOLOGIES, default="P2D")
    s.add_argument("--n", type=int, default=1024)
    s.add_argument("--order", type=int, default=DEFAULT_ORDER)
    s.add_argument("--z-min", type=float, default=GROUND_Z_MIN)
    s.add_argument("--clip", type=float, default=CLIP_RANGE)
    s.add_argument("--cell-size", type=float, default=CELL_SIZE)
    s.add_argument("--no-grids", dest="grids", action="store_false")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_occupancy_prep)

    s = sub.add_parser("gradcheck", help="compare reverse-mode and numerical gradients of a block")
    s.add_argument("block")
    s.add_argument("--block-config", help="JSON with n, channels and step")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_gradcheck)
    return p


def _subparsers(parser) -> dict[str, argparse.ArgumentParser]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return dict(action.choices)
    return {}


def _apply_config(parser, path: str) -> None:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise CLIError(EXIT_IO, f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CLIError(EXIT_INPUT, f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise CLIError(EXIT_INPUT, "config must be a JSON object")
    subs = _subparsers(parser)
    top = {}
    for key, value in cfg.items():
        if key in subs:
            if not isinstance(value, dict):
                raise CLIError(EXIT_INPUT, f"config section {key!r} must be an object")
            known = {a.dest for a in subs[key]._actions}
            bad = set(value) - known
            if bad:
                raise CLIError(EXIT_INPUT, f"unknown keys {sorted(bad)} in config section {key!r}")
            subs[key].set_defaults(**value)
        elif key in ("seed",):
            top[key] = value
        else:
            raise CLIError(EXIT_INPUT, f"unknown config key {key!r}")
    parser.set_defaults(**top)


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "print_config", "config")}


def _print_defaults(parser) -> None:
    out = {"seed": parser.get_default("seed")}
    for name, sp in _subparsers(parser).items():
        out[name] = {a.dest: a.default for a in sp._actions
                     if a.dest not in ("help",) and a.default is not argparse.SUPPRESS
                     and not a.required and a.option_strings}
    sys.stdout.write(dumps17(out) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        config_path = _peek_config(argv)
        if config_path:
            _apply_config(parser, config_path)
        args = parser.parse_args(argv)
        if args.print_config:
            if args.command is None:
                _print_defaults(parser)
            else:
                sys.stdout.write(dumps17(_resolved(args)) + "\n")
            return EXIT_OK
        if args.command is None:
            raise CLIError(EXIT_INPUT, "a subcommand is required")
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (XYZParseError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (NumericError, ConvergenceError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def _peek_config(argv) -> str | None:
    argv = list(sys.argv[1:] if argv is None else argv)
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


if __name__ == "__main__":
    sys.exit(main())
