"""Dense NHWC tensors (numpy float64), layer kernels with hand-written backward passes, SGD."""

from udet.nn.functional import (
    conv2d_backward,
    conv2d_forward,
    dropout_forward,
    fully_connected_forward,
    leaky_relu,
    leaky_relu_grad,
    maxpool_backward,
    maxpool_forward,
)
from udet.nn.network import LayerSpec, Network, NetworkSpec, load_checkpoint, save_checkpoint
from udet.nn.optim import OptimizerState, ScheduleConfig, lr_schedule, sgd_step

__all__ = [
    "LayerSpec",
    "Network",
    "NetworkSpec",
    "OptimizerState",
    "ScheduleConfig",
    "conv2d_backward",
    "conv2d_forward",
    "dropout_forward",
    "fully_connected_forward",
    "leaky_relu",
    "leaky_relu_grad",
    "load_checkpoint",
    "lr_schedule",
    "maxpool_backward",
    "maxpool_forward",
    "save_checkpoint",
    "sgd_step",
]
