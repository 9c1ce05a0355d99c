from .checkpoint import load_checkpoint, save_checkpoint
from .layers import (
    ForwardTrace,
    LayerGradients,
    LayerSpec,
    conv,
    deconv,
    layer_backward,
    layer_forward,
    logistic_head,
    maxpool,
    relu,
    skip_concat,
)
from .network import (
    NetworkParams,
    backward_full,
    encoder_decoder,
    infer_shapes,
    init_params,
    network_backward,
    network_forward,
    pooling_factor,
    sgd_update,
)

__all__ = [
    "ForwardTrace",
    "LayerGradients",
    "LayerSpec",
    "NetworkParams",
    "backward_full",
    "conv",
    "deconv",
    "encoder_decoder",
    "infer_shapes",
    "init_params",
    "layer_backward",
    "layer_forward",
    "load_checkpoint",
    "logistic_head",
    "maxpool",
    "network_backward",
    "network_forward",
    "pooling_factor",
    "relu",
    "save_checkpoint",
    "sgd_update",
    "skip_concat",
]
