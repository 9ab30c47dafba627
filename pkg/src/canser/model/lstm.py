"""Differentiable (bi)directional LSTM layers over padded, masked batches."""

import numpy as np

from .. import kernels
from ..autodiff import Tensor, concat, make_node
from ..errors import DimensionError, InvalidInputError


class LSTMParams:
    """Weights for one direction; gate blocks ordered input, forget, cell, output."""

    def __init__(self, input_size, hidden_size, rng):
        bound = 1.0 / np.sqrt(hidden_size)
        self.hidden_size = hidden_size
        self.w_x = Tensor(rng.uniform(-bound, bound, (input_size, 4 * hidden_size)), True)
        self.w_h = Tensor(rng.uniform(-bound, bound, (hidden_size, 4 * hidden_size)), True)
        b = np.zeros(4 * hidden_size)
        b[hidden_size : 2 * hidden_size] = 1.0
        self.b = Tensor(b, True)

    def named_parameters(self):
        return [("w_x", self.w_x), ("w_h", self.w_h), ("b", self.b)]


def _reversal_index(lengths, steps):
    """``idx[n, t]`` flips the first ``lengths[n]`` steps and fixes the padding."""
    t = np.arange(steps)[None, :]
    lengths = lengths[:, None]
    return np.where(t < lengths, lengths - 1 - t, t)


def lstm(x, lengths, params, reverse=False, kernel=None):
    """Run one LSTM direction over ``x[n, :lengths[n]]``; padding outputs are zero.

    ``x`` is ``(N, T, D)``. With ``reverse`` the recurrence runs from step
    ``lengths[n] - 1`` down to 0; outputs stay in original step order.
    """
    kernel = kernel or kernels
    if x.ndim != 3 or x.shape[2] != params.w_x.shape[0]:
        raise DimensionError(
            f"lstm: input shape {x.shape} incompatible with weights {params.w_x.shape}"
        )
    lengths = np.ascontiguousarray(lengths, dtype=np.int64)
    n, steps, _ = x.shape
    if steps == 0 or lengths.shape != (n,) or (lengths < 1).any() or (lengths > steps).any():
        raise InvalidInputError("lstm: every sequence needs between 1 and T steps")

    rows = np.arange(n)[:, None]
    idx = _reversal_index(lengths, steps) if reverse else None
    xs = x.data[rows, idx] if reverse else x.data
    xs = np.ascontiguousarray(xs)
    w_x, w_h, b = params.w_x.data, params.w_h.data, params.b.data
    h, c, gates = kernel.lstm_forward(xs, lengths, w_x, w_h, b)
    out = h[rows, idx] if reverse else h

    def backward(g):
        dh = np.ascontiguousarray(g[rows, idx] if reverse else g)
        dx, dw_x, dw_h, db = kernel.lstm_backward(dh, xs, lengths, w_x, w_h, h, c, gates)
        if reverse:
            dx = dx[rows, idx]
        return dx, dw_x, dw_h, db

    return make_node(out, (x, params.w_x, params.w_h, params.b), backward, "lstm")


class BLSTM:
    """Forward and backward LSTMs with per-step concatenation ``[fwd; bwd]``."""

    def __init__(self, input_size, hidden_size, rng):
        self.forward_params = LSTMParams(input_size, hidden_size, rng)
        self.backward_params = LSTMParams(input_size, hidden_size, rng)

    def __call__(self, x, lengths, kernel=None):
        fwd = lstm(x, lengths, self.forward_params, kernel=kernel)
        bwd = lstm(x, lengths, self.backward_params, reverse=True, kernel=kernel)
        return concat([fwd, bwd], axis=-1)

    def named_parameters(self):
        return [("fwd." + k, v) for k, v in self.forward_params.named_parameters()] + [
            ("bwd." + k, v) for k, v in self.backward_params.named_parameters()
        ]
