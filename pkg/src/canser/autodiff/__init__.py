"""Minimal reverse-mode automatic differentiation on numpy arrays."""

from .ops import (
    LOG_FLOOR,
    add,
    concat,
    cross_entropy,
    div,
    dropout,
    exp,
    index,
    log,
    masked_mean_pool,
    masked_softmax,
    matmul,
    mean,
    mul,
    power,
    reshape,
    scale,
    scatter_rows,
    sigmoid,
    softmax,
    stop_gradient,
    sub,
    sum,
    take,
    tanh,
    transpose,
)
from .tensor import DTYPE, Tensor, as_tensor, make_node

__all__ = [
    "DTYPE",
    "LOG_FLOOR",
    "Tensor",
    "add",
    "as_tensor",
    "concat",
    "cross_entropy",
    "div",
    "dropout",
    "exp",
    "index",
    "log",
    "make_node",
    "masked_mean_pool",
    "masked_softmax",
    "matmul",
    "mean",
    "mul",
    "power",
    "reshape",
    "scale",
    "scatter_rows",
    "sigmoid",
    "softmax",
    "stop_gradient",
    "sub",
    "sum",
    "take",
    "tanh",
    "transpose",
]
