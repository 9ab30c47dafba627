# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled LSTM recurrence kernels; same contract as ``_lstm_np``.

Plain C loops with a fixed reduction order per sequence, so results for one
sequence never depend on the rest of the batch.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, tanh

cnp.import_array()


cdef inline double _sigmoid(double z) nogil:
    cdef double e = exp(-fabs(z))
    if z >= 0:
        return 1.0 / (1.0 + e)
    return e / (1.0 + e)


def lstm_forward(double[:, :, ::1] x, long long[::1] lengths,
                 double[:, ::1] w_x, double[:, ::1] w_h, double[::1] b):
    cdef Py_ssize_t n = x.shape[0], steps = x.shape[1], dim = x.shape[2]
    cdef Py_ssize_t hid = w_h.shape[0], g4 = 4 * hid
    h_arr = np.zeros((n, steps, hid))
    c_arr = np.zeros((n, steps, hid))
    gates_arr = np.zeros((n, steps, g4))
    z_arr = np.empty(g4)
    cdef double[:, :, ::1] h = h_arr
    cdef double[:, :, ::1] c = c_arr
    cdef double[:, :, ::1] gates = gates_arr
    cdef double[::1] z = z_arr
    cdef Py_ssize_t s, t, d, k, j, length
    cdef double acc, xv, hv, cv, ig, fg, gg, og, cp
    with nogil:
        for s in range(n):
            length = lengths[s]
            if length > steps:
                length = steps
            for t in range(length):
                for j in range(g4):
                    z[j] = 0.0
                for d in range(dim):
                    xv = x[s, t, d]
                    for j in range(g4):
                        z[j] += xv * w_x[d, j]
                if t > 0:
                    for k in range(hid):
                        hv = h[s, t - 1, k]
                        for j in range(g4):
                            z[j] += hv * w_h[k, j]
                for k in range(hid):
                    ig = _sigmoid(z[k] + b[k])
                    fg = _sigmoid(z[hid + k] + b[hid + k])
                    gg = tanh(z[2 * hid + k] + b[2 * hid + k])
                    og = _sigmoid(z[3 * hid + k] + b[3 * hid + k])
                    cp = c[s, t - 1, k] if t > 0 else 0.0
                    cv = fg * cp + ig * gg
                    c[s, t, k] = cv
                    h[s, t, k] = og * tanh(cv)
                    gates[s, t, k] = ig
                    gates[s, t, hid + k] = fg
                    gates[s, t, 2 * hid + k] = gg
                    gates[s, t, 3 * hid + k] = og
    return h_arr, c_arr, gates_arr


def lstm_backward(double[:, :, ::1] dh_out, double[:, :, ::1] x,
                  long long[::1] lengths, double[:, ::1] w_x, double[:, ::1] w_h,
                  double[:, :, ::1] h, double[:, :, ::1] c,
                  double[:, :, ::1] gates):
    cdef Py_ssize_t n = x.shape[0], steps = x.shape[1], dim = x.shape[2]
    cdef Py_ssize_t hid = w_h.shape[0], g4 = 4 * hid
    dx_arr = np.zeros((n, steps, dim))
    dwx_arr = np.zeros((dim, g4))
    dwh_arr = np.zeros((hid, g4))
    db_arr = np.zeros(g4)
    dz_arr = np.empty(g4)
    dh_next_arr = np.zeros(hid)
    dc_next_arr = np.zeros(hid)
    cdef double[:, :, ::1] dx = dx_arr
    cdef double[:, ::1] dwx = dwx_arr
    cdef double[:, ::1] dwh = dwh_arr
    cdef double[::1] db = db_arr
    cdef double[::1] dz = dz_arr
    cdef double[::1] dh_next = dh_next_arr
    cdef double[::1] dc_next = dc_next_arr
    cdef Py_ssize_t s, t, d, k, j, length
    cdef double ig, fg, gg, og, tc, dh, dc, cp, acc, xv
    with nogil:
        for s in range(n):
            length = lengths[s]
            if length > steps:
                length = steps
            for k in range(hid):
                dh_next[k] = 0.0
                dc_next[k] = 0.0
            for t in range(length - 1, -1, -1):
                for k in range(hid):
                    ig = gates[s, t, k]
                    fg = gates[s, t, hid + k]
                    gg = gates[s, t, 2 * hid + k]
                    og = gates[s, t, 3 * hid + k]
                    cp = c[s, t - 1, k] if t > 0 else 0.0
                    tc = tanh(c[s, t, k])
                    dh = dh_out[s, t, k] + dh_next[k]
                    dc = dc_next[k] + dh * og * (1.0 - tc * tc)
                    dz[k] = dc * gg * ig * (1.0 - ig)
                    dz[hid + k] = dc * cp * fg * (1.0 - fg)
                    dz[2 * hid + k] = dc * ig * (1.0 - gg * gg)
                    dz[3 * hid + k] = dh * tc * og * (1.0 - og)
                    dc_next[k] = dc * fg
                for j in range(g4):
                    db[j] += dz[j]
                for d in range(dim):
                    xv = x[s, t, d]
                    acc = 0.0
                    for j in range(g4):
                        acc += dz[j] * w_x[d, j]
                        dwx[d, j] += xv * dz[j]
                    dx[s, t, d] = acc
                for k in range(hid):
                    acc = 0.0
                    for j in range(g4):
                        acc += dz[j] * w_h[k, j]
                    dh_next[k] = acc
                if t > 0:
                    for k in range(hid):
                        xv = h[s, t - 1, k]
                        for j in range(g4):
                            dwh[k, j] += xv * dz[j]
    return dx_arr, dwx_arr, dwh_arr, db_arr
