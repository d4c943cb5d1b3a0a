"""Toy-scale point-sequence network blocks with reverse-mode gradients."""
from .blocks import (
    AggregatedConfig,
    BFAConfig,
    CAConfig,
    ConvSpec,
    MFAConfig,
    ResUnitConfig,
    SepConvConfig,
    aggregated_forward,
    attentive_recheck,
    bfa_forward,
    channel_attention,
    conv1d,
    grad_check,
    init_aggregated,
    init_bfa,
    init_ca,
    init_mfa,
    init_resunit,
    init_sepconv,
    mfa_forward,
    params_from_json,
    params_to_json,
    residual_unit,
    separable_conv1d,
    sub,
)
from . import tape
from .tape import Tensor
