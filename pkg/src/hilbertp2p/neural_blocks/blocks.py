"""Network building blocks for Hilbert-sorted point sequences, at toy scale.

Blocks act on (n, C) feature maps of Hilbert-sorted points and never change
n. Learnable arrays live in flat ``dict[str, ndarray]`` parameter sets with
dotted names (``"branch1.w"``), so a block's parameters serialise to JSON
and can be perturbed one entry at a time by :func:`grad_check`. Each forward
function takes ``(x, params, cfg)`` and returns a tape :class:`Tensor`;
pass tape tensors as parameters to get their gradients.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from ..errors import DomainError, NumericError, ShapeError
from . import tape
from .tape import Tensor, lift

Params = Mapping[str, "np.ndarray | Tensor"]
PARAMS_FORMAT = "hilbertp2p.params/1"


def sub(params: Params, prefix: str) -> dict:
    """Entries of ``params`` under ``prefix.``, with the prefix stripped."""
    p = prefix + "."
    return {k[len(p):]: v for k, v in params.items() if k.startswith(p)}


def _prefixed(prefix: str, params: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {f"{prefix}.{k}": v for k, v in params.items()}


@dataclass(frozen=True)
class ConvSpec:
    """A 1-D convolution layer: weights (kernel, in, out), bias (out,)."""

    weights: np.ndarray
    bias: np.ndarray
    dilation: int = 1

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 3:
            raise ShapeError(f"conv weights must be (kernel, in, out), got {w.shape}")
        if w.shape[0] % 2 == 0:
            raise ShapeError(f"kernel size must be odd, got {w.shape[0]}")
        if b.shape != (w.shape[2],):
            raise ShapeError(f"bias shape {b.shape} does not match {w.shape[2]} outputs")
        if self.dilation < 1:
            raise ShapeError(f"dilation must be >= 1, got {self.dilation}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def kernel(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weights.shape[2]

    @property
    def radius(self) -> int:
        return (self.kernel - 1) * self.dilation // 2

    @classmethod
    def random(cls, rng, kernel, cin, cout, dilation=1, scale=None):
        scale = scale if scale is not None else 1.0 / np.sqrt(kernel * cin)
        return cls(rng.normal(0, scale, (kernel, cin, cout)), rng.normal(0, 0.1, cout), dilation)

    def params(self) -> dict[str, np.ndarray]:
        return {"w": self.weights, "b": self.bias}


def conv1d(x, s: ConvSpec) -> Tensor:
    return tape.conv1d(x, s.weights, s.bias, s.dilation)


def _conv(x, params: Params, name: str, dilation: int = 1) -> Tensor:
    return tape.conv1d(x, params[f"{name}.w"], params[f"{name}.b"], dilation)


def _init_conv(rng, kernel, cin, cout) -> dict[str, np.ndarray]:
    return ConvSpec.random(rng, kernel, cin, cout).params()


# Per-channel affine (inference-form batch norm) and the small composite layers

def affine(x, scale, shift) -> Tensor:
    return tape.add(tape.mul(x, scale), shift)


@dataclass(frozen=True)
class SepConvConfig:
    channels_in: int
    channels_out: int
    kernel: int = 3
    dilation: int = 1


def init_sepconv(cfg: SepConvConfig, rng) -> dict[str, np.ndarray]:
    return {
        "depth.w": rng.normal(0, 1 / np.sqrt(cfg.kernel), (cfg.kernel, cfg.channels_in)),
        **_prefixed("point", _init_conv(rng, 1, cfg.channels_in, cfg.channels_out)),
    }


def separable_conv1d(x, params: Params, cfg: SepConvConfig) -> Tensor:
    """Depthwise convolution followed by a kernel-1 pointwise mix."""
    h = tape.depthwise_conv1d(x, params["depth.w"], cfg.dilation)
    return _conv(h, params, "point")


@dataclass(frozen=True)
class ResUnitConfig:
    channels: int
    kernel: int = 3


def init_resunit(cfg: ResUnitConfig, rng) -> dict[str, np.ndarray]:
    c = cfg.channels
    return {
        **_prefixed("conv1", _init_conv(rng, cfg.kernel, c, c)),
        "bn.scale": 1.0 + rng.normal(0, 0.1, c),
        "bn.shift": rng.normal(0, 0.1, c),
        **_prefixed("conv2", _init_conv(rng, cfg.kernel, c, c)),
    }


def residual_unit(x, params: Params, cfg: ResUnitConfig) -> Tensor:
    """x + conv2(relu(affine(conv1(x))))."""
    h = _conv(x, params, "conv1")
    h = tape.relu(affine(h, params["bn.scale"], params["bn.shift"]))
    return tape.add(x, _conv(h, params, "conv2"))


# Channel attention

@dataclass(frozen=True)
class CAConfig:
    channels: int
    reduction: int = 2

    @property
    def hidden(self) -> int:
        return max(1, self.channels // self.reduction)


def init_ca(cfg: CAConfig, rng) -> dict[str, np.ndarray]:
    c, h = cfg.channels, cfg.hidden
    return {
        "fc1.w": rng.normal(0, 1 / np.sqrt(c), (c, h)),
        "fc1.b": rng.normal(0, 0.1, h),
        "fc2.w": rng.normal(0, 1 / np.sqrt(h), (h, c)),
        "fc2.b": rng.normal(0, 0.1, c),
    }


def channel_attention(x, params: Params, cfg: CAConfig | None = None) -> Tensor:
    """Squeeze-and-excitation gating: x scaled per channel by s in (0, 1)."""
    x = lift(x)
    if x.data.ndim != 2 or x.shape[1] != np.shape(lift(params["fc1.w"]).data)[0]:
        raise ShapeError(f"channel attention: input {x.shape} vs fc1 {np.shape(lift(params['fc1.w']).data)}")
    squeeze = tape.mean_rows(x)
    hidden = tape.relu(tape.linear(squeeze, params["fc1.w"], params["fc1.b"]))
    s = tape.sigmoid(tape.linear(hidden, params["fc2.w"], params["fc2.b"]))
    return tape.mul(x, s)


# Multi-scale feature aggregation

@dataclass(frozen=True)
class MFAConfig:
    channels_in: int
    channels_out: int
    kernels: tuple[int, ...] = (1, 3, 5)
    dilations: tuple[int, ...] = (1, 2, 4)
    branch_channels: int | None = None

    def __post_init__(self):
        if len(self.kernels) != len(self.dilations) or len(self.kernels) < 1:
            raise DomainError("MFA needs matching, non-empty kernel and dilation lists")
        if any(k % 2 == 0 for k in self.kernels):
            raise DomainError(f"MFA kernels must be odd, got {self.kernels}")

    @property
    def width(self) -> int:
        return self.branch_channels or self.channels_out

    @property
    def radius(self) -> int:
        return max((k - 1) * d // 2 for k, d in zip(self.kernels, self.dilations))


def init_mfa(cfg: MFAConfig, rng) -> dict[str, np.ndarray]:
    params = {}
    for i, k in enumerate(cfg.kernels):
        params.update(_prefixed(f"branch{i}", _init_conv(rng, k, cfg.channels_in, cfg.width)))
    params.update(_prefixed("fuse", _init_conv(rng, 1, cfg.width * len(cfg.kernels), cfg.channels_out)))
    return params


def mfa_forward(x, params: Params, cfg: MFAConfig) -> Tensor:
    """Parallel dilated convolutions, concatenated and fused by a kernel-1 conv."""
    branches = [_conv(x, params, f"branch{i}", d) for i, d in enumerate(cfg.dilations)]
    return _conv(tape.concat(branches, axis=1), params, "fuse")


# Bilateral feature aggregation

@dataclass(frozen=True)
class BFAConfig:
    channels: int
    channels_out: int | None = None
    gate_kernel: int = 3

    @property
    def out(self) -> int:
        return self.channels_out or self.channels


def init_bfa(cfg: BFAConfig, rng) -> dict[str, np.ndarray]:
    c = cfg.channels
    return {
        **_prefixed("gate_a", _init_conv(rng, cfg.gate_kernel, c, c)),
        **_prefixed("gate_b", _init_conv(rng, cfg.gate_kernel, c, c)),
        **_prefixed("fuse", _init_conv(rng, 1, c, cfg.out)),
    }


def bfa_forward(a, b, params: Params, cfg: BFAConfig | None = None) -> Tensor:
    """Cross-gated fusion of two feature maps of equal length.

    fuse(a * sigmoid(gate_a(b)) + b * sigmoid(gate_b(a)))
    """
    a, b = lift(a), lift(b)
    if a.shape != b.shape:
        raise ShapeError(f"BFA inputs differ in shape: {a.shape} vs {b.shape}")
    mixed = tape.add(
        tape.mul(a, tape.sigmoid(_conv(b, params, "gate_a"))),
        tape.mul(b, tape.sigmoid(_conv(a, params, "gate_b"))),
    )
    return _conv(mixed, params, "fuse")


# Aggregated block

@dataclass(frozen=True)
class AggregatedConfig:
    heavy_channels: int
    channels: int
    kernels: tuple[int, ...] = (1, 3, 5)
    dilations: tuple[int, ...] = (1, 2, 4)
    reduction: int = 2
    gate_kernel: int = 3

    @property
    def mfa(self) -> MFAConfig:
        return MFAConfig(self.heavy_channels, self.channels, self.kernels, self.dilations)

    @property
    def ca(self) -> CAConfig:
        return CAConfig(self.channels, self.reduction)

    @property
    def bfa(self) -> BFAConfig:
        return BFAConfig(self.channels, gate_kernel=self.gate_kernel)


def init_aggregated(cfg: AggregatedConfig, rng) -> dict[str, np.ndarray]:
    return {
        **_prefixed("mfa", init_mfa(cfg.mfa, rng)),
        **_prefixed("ca", init_ca(cfg.ca, rng)),
        **_prefixed("bfa", init_bfa(cfg.bfa, rng)),
    }


def attentive_recheck(m, params: Params, cfg: AggregatedConfig) -> Tensor:
    """MFA features split in two: one copy gated by CA, the other passed
    through, recombined by addition."""
    return tape.add(channel_attention(m, sub(params, "ca"), cfg.ca), m)


def aggregated_forward(heavy, light, params: Params, cfg: AggregatedConfig) -> Tensor:
    """bfa(recheck(mfa(heavy)), light); parameters live under mfa., ca. and bfa."""
    m = mfa_forward(heavy, sub(params, "mfa"), cfg.mfa)
    return bfa_forward(attentive_recheck(m, params, cfg), light, sub(params, "bfa"), cfg.bfa)


# Parameter container

def params_to_json(params: Mapping[str, np.ndarray]) -> str:
    """Flat list of named arrays: name, shape and row-major values."""
    arrays = []
    for name, value in params.items():
        arr = np.asarray(lift(value).data, dtype=np.float64)
        arrays.append({"name": name, "shape": list(arr.shape), "values": arr.ravel().tolist()})
    return json.dumps({"format": PARAMS_FORMAT, "arrays": arrays})


def params_from_json(text: str) -> dict[str, np.ndarray]:
    doc = json.loads(text)
    if doc.get("format") != PARAMS_FORMAT:
        raise DomainError(f"unrecognised parameter container format {doc.get('format')!r}")
    out = {}
    for entry in doc["arrays"]:
        values = np.asarray(entry["values"], dtype=np.float64)
        shape = tuple(entry["shape"])
        if values.size != int(np.prod(shape)):
            raise ShapeError(f"{entry['name']}: {values.size} values for shape {shape}")
        out[entry["name"]] = values.reshape(shape)
    return out


# Gradient check

def grad_check(f: Callable[[Tensor, Params], Tensor], params: Mapping[str, np.ndarray], x,
               step: float = 1e-5, include_input: bool = True) -> float:
    """Max relative error between tape and central-difference gradients.

    The scalar checked is sum(f(x, params)**2) / 2. The relative error of an
    entry is |g_tape - g_fd| / max(|g_tape|, 1e-8).
    """
    if not step > 0:
        raise DomainError(f"step must be positive, got {step}")
    base = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    x = np.array(lift(x).data, dtype=np.float64)

    leaves = {k: Tensor(v) for k, v in base.items()}
    x_leaf = Tensor(x)
    loss = tape.half_sum_squares(f(x_leaf, leaves))
    if not np.isfinite(loss.data):
        raise NumericError("forward pass produced a non-finite value")
    loss.backward()

    def value(xv, pv) -> float:
        out = float(tape.half_sum_squares(f(Tensor(xv), pv)).data)
        if not np.isfinite(out):
            raise NumericError("forward pass produced a non-finite value")
        return out

    targets = [(k, base[k], leaves[k].grad) for k in base]
    if include_input:
        targets.append((None, x, x_leaf.grad))
    worst = 0.0
    for name, arr, g in targets:
        g = np.zeros_like(arr) if g is None else g
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + step
            up = value(x, base) if name is not None else value(arr, base)
            arr[idx] = orig - step
            down = value(x, base) if name is not None else value(arr, base)
            arr[idx] = orig
            fd = (up - down) / (2 * step)
            worst = max(worst, abs(g[idx] - fd) / max(abs(g[idx]), 1e-8))
    return worst
