"""Pure-numpy LSTM recurrence kernels.

Matrix products use ``np.einsum`` rather than BLAS: einsum reduces each
output element in a fixed order, so a sequence's result does not depend on
how many other sequences share the batch. BLAS gemm gives no such guarantee.

Gate layout along the last axis of ``w_x``, ``w_h``, ``b``: input, forget,
cell candidate, output.
"""

import numpy as np


def _sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def lstm_forward(x, lengths, w_x, w_h, b):
    """Run a left-to-right LSTM over ``x[n, :lengths[n]]``.

    Returns ``(h, c, gates)`` with shapes ``(N, T, H)``, ``(N, T, H)`` and
    ``(N, T, 4H)``; positions at or past a sequence's length are zero.
    """
    n, steps, _ = x.shape
    hid = w_h.shape[0]
    h = np.zeros((n, steps, hid))
    c = np.zeros((n, steps, hid))
    gates = np.zeros((n, steps, 4 * hid))
    x_proj = np.einsum("ntd,dg->ntg", x, w_x)
    h_prev = np.zeros((n, hid))
    c_prev = np.zeros((n, hid))
    for t in range(steps):
        active = (lengths > t)[:, None]
        if not active.any():
            break
        z = x_proj[:, t] + np.einsum("nk,kg->ng", h_prev, w_h) + b
        i = _sigmoid(z[:, :hid])
        f = _sigmoid(z[:, hid : 2 * hid])
        g = np.tanh(z[:, 2 * hid : 3 * hid])
        o = _sigmoid(z[:, 3 * hid :])
        c_t = np.where(active, f * c_prev + i * g, 0.0)
        h_t = np.where(active, o * np.tanh(c_t), 0.0)
        gates[:, t] = np.where(active, np.concatenate([i, f, g, o], axis=1), 0.0)
        h[:, t] = h_t
        c[:, t] = c_t
        h_prev, c_prev = h_t, c_t
    return h, c, gates


def lstm_backward(dh_out, x, lengths, w_x, w_h, h, c, gates):
    """Backpropagate ``dh_out`` (gradient w.r.t. ``h``) through time.

    Returns ``(dx, dw_x, dw_h, db)``.
    """
    n, steps, _ = x.shape
    hid = w_h.shape[0]
    dz_all = np.zeros((n, steps, 4 * hid))
    dh_next = np.zeros((n, hid))
    dc_next = np.zeros((n, hid))
    zeros = np.zeros((n, hid))
    for t in range(steps - 1, -1, -1):
        active = (lengths > t)[:, None]
        if not active.any():
            continue
        i = gates[:, t, :hid]
        f = gates[:, t, hid : 2 * hid]
        g = gates[:, t, 2 * hid : 3 * hid]
        o = gates[:, t, 3 * hid :]
        c_prev = c[:, t - 1] if t > 0 else zeros
        tc = np.tanh(c[:, t])
        dh = dh_out[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz = np.concatenate(
            [
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - g * g),
                dh * tc * o * (1.0 - o),
            ],
            axis=1,
        )
        dz = np.where(active, dz, 0.0)
        dz_all[:, t] = dz
        dh_next = np.einsum("ng,kg->nk", dz, w_h)
        dc_next = np.where(active, dc * f, 0.0)
    h_prev = np.concatenate([np.zeros((n, 1, hid)), h[:, :-1]], axis=1)
    dx = np.einsum("ntg,dg->ntd", dz_all, w_x)
    dw_x = np.einsum("ntd,ntg->dg", x, dz_all)
    dw_h = np.einsum("ntk,ntg->kg", h_prev, dz_all)
    db = dz_all.sum(axis=(0, 1))
    return dx, dw_x, dw_h, db
