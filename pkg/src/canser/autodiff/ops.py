"""Differentiable operations on :class:`Tensor`.

Each op computes its forward value with numpy and, when any input requires
gradients, records a closure returning one gradient per input (``None`` for
inputs that receive nothing).
"""

import numpy as np

from ..errors import DimensionError, InvalidInputError
from .tensor import DTYPE, Tensor, as_tensor, make_node

#: Probabilities are clamped to this floor before any logarithm.
LOG_FLOOR = 1e-12


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(a, b, opname):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(
            f"{opname}: shapes {a.shape} and {b.shape} do not broadcast"
        ) from None


# -- arithmetic ---------------------------------------------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return make_node(a.data + b.data, (a, b), backward, "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return make_node(a.data - b.data, (a, b), backward, "sub")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def backward(g):
        ga = _unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return make_node(a.data * b.data, (a, b), backward, "mul")


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "div")

    def backward(g):
        ga = _unbroadcast(g / b.data, a.shape) if a.requires_grad else None
        gb = (
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape)
            if b.requires_grad
            else None
        )
        return ga, gb

    return make_node(a.data / b.data, (a, b), backward, "div")


def scale(x, factor):
    """Multiply by a Python scalar constant."""
    x = as_tensor(x)
    factor = float(factor)
    return make_node(x.data * factor, (x,), lambda g: (g * factor,), "scale")


def power(x, exponent):
    x = as_tensor(x)
    exponent = float(exponent)

    def backward(g):
        return (g * exponent * x.data ** (exponent - 1.0),)

    return make_node(x.data**exponent, (x,), backward, "power")


def matmul(a, b):
    """Matrix product with numpy ``matmul`` semantics for ndim >= 2 operands."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 1 or b.ndim < 1 or a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
        raise DimensionError(f"matmul: cannot multiply shapes {a.shape} and {b.shape}")
    a2 = a.data[None, :] if a.ndim == 1 else a.data
    b2 = b.data[:, None] if b.ndim == 1 else b.data
    try:
        out = np.matmul(a2, b2)
    except ValueError:
        raise DimensionError(
            f"matmul: cannot multiply shapes {a.shape} and {b.shape}"
        ) from None
    out_shape = out.shape
    if a.ndim == 1:
        out_shape = out_shape[:-2] + out_shape[-1:]
    if b.ndim == 1:
        out_shape = out_shape[:-1]

    def backward(g):
        g2 = g.reshape(out.shape)
        ga = gb = None
        if a.requires_grad:
            ga = np.matmul(g2, np.swapaxes(b2, -1, -2))
            ga = _unbroadcast(ga, a2.shape).reshape(a.shape)
        if b.requires_grad:
            gb = np.matmul(np.swapaxes(a2, -1, -2), g2)
            gb = _unbroadcast(gb, b2.shape).reshape(b.shape)
        return ga, gb

    return make_node(out.reshape(out_shape), (a, b), backward, "matmul")


# -- reductions and reshaping ---------------------------------------------------

def _normalize_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def sum(x, axis=None, keepdims=False):  # noqa: A001
    x = as_tensor(x)
    axes = _normalize_axes(axis, x.ndim)
    out = x.data.sum(axis=axes, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, x.shape).copy(),)

    return make_node(out, (x,), backward, "sum")


def mean(x, axis=None, keepdims=False):
    x = as_tensor(x)
    axes = _normalize_axes(axis, x.ndim)
    count = 1
    for a in axes:
        count *= x.shape[a]
    return scale(sum(x, axis=axes, keepdims=keepdims), 1.0 / count)


def reshape(x, shape):
    x = as_tensor(x)
    out = x.data.reshape(shape)
    return make_node(out, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def transpose(x, axes=None):
    x = as_tensor(x)
    if axes is None:
        axes = tuple(reversed(range(x.ndim)))
    inverse = tuple(np.argsort(axes))
    return make_node(
        np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),), "transpose"
    )


def index(x, key):
    """Basic or advanced indexing; repeated indices accumulate gradient."""
    x = as_tensor(x)
    out = x.data[key]

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, key, g)
        return (full,)

    return make_node(np.array(out, dtype=DTYPE), (x,), backward, "index")


def take(table, ids):
    """Row lookup ``table[ids]``; the gradient scatters back with accumulation."""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise DimensionError(f"take: table must be 2-D, got shape {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise InvalidInputError(
            f"take: ids must lie in [0, {table.shape[0]}), got range "
            f"[{ids.min()}, {ids.max()}]"
        )

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids.reshape(-1), g.reshape(-1, table.shape[1]))
        return (full,)

    return make_node(table.data[ids], (table,), backward, "take")


def scatter_rows(x, positions, n_rows):
    """Place the rows of ``x`` at ``positions`` in a zero matrix of ``n_rows`` rows."""
    x = as_tensor(x)
    positions = np.asarray(positions, dtype=np.int64)
    if positions.shape != (x.shape[0],):
        raise DimensionError(
            f"scatter_rows: {x.shape[0]} rows but {positions.shape} positions"
        )
    out = np.zeros((n_rows,) + x.shape[1:], dtype=DTYPE)
    out[positions] = x.data
    return make_node(out, (x,), lambda g: (g[positions],), "scatter_rows")


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise InvalidInputError("concat: need at least one tensor")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise DimensionError(
            "concat: incompatible shapes " + ", ".join(str(t.shape) for t in tensors)
        ) from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return make_node(out, tensors, backward, "concat")


# -- elementwise nonlinearities -------------------------------------------------

def _sigmoid(z):
    # exp never overflows: the argument is always <= 0
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def tanh(x):
    x = as_tensor(x)
    y = np.tanh(x.data)
    return make_node(y, (x,), lambda g: (g * (1.0 - y * y),), "tanh")


def sigmoid(x):
    x = as_tensor(x)
    y = _sigmoid(x.data)
    return make_node(y, (x,), lambda g: (g * y * (1.0 - y),), "sigmoid")


def exp(x):
    x = as_tensor(x)
    y = np.exp(x.data)
    return make_node(y, (x,), lambda g: (g * y,), "exp")


def log(x, floor=0.0):
    """Natural log; with ``floor > 0`` inputs below it are clamped (zero gradient)."""
    x = as_tensor(x)
    clamped = np.maximum(x.data, floor) if floor > 0 else x.data
    live = x.data >= floor if floor > 0 else None

    def backward(g):
        gx = g / clamped
        if live is not None:
            gx = np.where(live, gx, 0.0)
        return (gx,)

    return make_node(np.log(clamped), (x,), backward, "log")


def stop_gradient(x):
    """Identity forward, zero backward: the result is a graph leaf.

    The returned tensor shares ``x``'s buffer, so its values are bit-identical
    to the input and nothing propagates back through it.
    """
    x = as_tensor(x)
    out = Tensor(x.data, requires_grad=False)
    out.op = "stop_gradient"
    return out


def dropout(x, p, training, rng=None):
    """Inverted dropout; identity (same object) at evaluation time."""
    if not 0.0 <= p < 1.0:
        raise InvalidInputError(f"dropout probability must lie in [0, 1), got {p}")
    x = as_tensor(x)
    if not training or p == 0.0:
        return x
    if rng is None:
        raise InvalidInputError("dropout in training mode needs a random generator")
    keep = (rng.random(x.shape) >= p).astype(DTYPE) / (1.0 - p)
    return make_node(x.data * keep, (x,), lambda g: (g * keep,), "dropout")


# -- normalizations and losses ---------------------------------------------------

def masked_softmax(logits, mask=None, axis=-1):
    """Exp-normalize along ``axis`` over positions where ``mask`` is true.

    Masked positions get exactly zero weight and exactly zero gradient.
    ``mask`` must broadcast against ``logits``; every slice along ``axis``
    needs at least one true entry.
    """
    logits = as_tensor(logits)
    z = logits.data
    if mask is None:
        valid = np.ones(z.shape, dtype=bool)
    else:
        try:
            valid = np.broadcast_to(np.asarray(mask, dtype=bool), z.shape)
        except ValueError:
            raise DimensionError(
                f"masked_softmax: mask shape {np.shape(mask)} vs logits {z.shape}"
            ) from None
    if z.size == 0 or not valid.any(axis=axis).all():
        raise InvalidInputError("masked_softmax: every slice needs a valid position")
    peak = np.where(valid, z, -np.inf).max(axis=axis, keepdims=True)
    e = np.exp(np.where(valid, z - peak, -np.inf))
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return make_node(y, (logits,), backward, "masked_softmax")


def softmax(logits, axis=-1):
    return masked_softmax(logits, None, axis=axis)


def masked_mean_pool(x, valid):
    """Mean over the first ``valid[n]`` rows of each ``x[n]``.

    ``x`` is ``(T, D)`` with an integer ``valid``, or ``(N, T, D)`` with one
    count per item. Padded rows never contribute to value or gradient.
    """
    x = as_tensor(x)
    single = x.ndim == 2
    data = x.data[None] if single else x.data
    counts = np.atleast_1d(np.asarray(valid, dtype=np.int64))
    if data.ndim != 3 or counts.shape != (data.shape[0],):
        raise DimensionError(
            f"masked_mean_pool: x shape {x.shape} with valid counts {counts.shape}"
        )
    if (counts < 1).any() or (counts > data.shape[1]).any():
        raise InvalidInputError(
            f"masked_mean_pool: valid counts must lie in [1, {data.shape[1]}]"
        )
    rows = np.arange(data.shape[1])[None, :, None] < counts[:, None, None]
    weights = rows / counts[:, None, None].astype(DTYPE)
    out = np.where(rows, data, 0.0).sum(axis=1) / counts[:, None]
    if single:
        out = out[0]

    def backward(g):
        g3 = g[None] if single else g
        gx = weights * g3[:, None, :]
        return (gx[0] if single else gx,)

    return make_node(out, (x,), backward, "masked_mean_pool")


def cross_entropy(probs, labels, floor=LOG_FLOOR):
    """``-log(max(probs[label], floor))``.

    A ``(C,)`` vector with an integer label gives a scalar; ``(B, C)`` with
    ``B`` labels gives a length-``B`` vector of per-item losses.
    """
    probs = as_tensor(probs)
    single = probs.ndim == 1
    p = probs.data[None] if single else probs.data
    y = np.atleast_1d(np.asarray(labels))
    if p.ndim != 2 or y.shape != (p.shape[0],):
        raise DimensionError(
            f"cross_entropy: probs shape {probs.shape} with labels shape {np.shape(labels)}"
        )
    if not np.issubdtype(y.dtype, np.integer) or (y < 0).any() or (y >= p.shape[1]).any():
        raise InvalidInputError(
            f"cross_entropy: labels must be integers in [0, {p.shape[1]})"
        )
    if np.abs(p.sum(axis=1) - 1.0).max() > 1e-6:
        raise InvalidInputError("cross_entropy: probabilities must sum to 1")
    rows = np.arange(p.shape[0])
    picked = p[rows, y]
    clamped = np.maximum(picked, floor)
    out = -np.log(clamped)
    if single:
        out = out[0]

    def backward(g):
        gp = np.zeros_like(p)
        gp[rows, y] = np.where(picked >= floor, -np.atleast_1d(g) / clamped, 0.0)
        return (gp[0] if single else gp,)

    return make_node(out, (probs,), backward, "cross_entropy")
