# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled LSTM sequence kernels (hot path for training).

Mirrors ``kernels_py`` exactly: same signatures, same gate layout
(i|f|o|g row chunks), zero initial state. Per-timestep dims are small for
this artifact, so fused C loops beat numpy's per-op dispatch overhead.
"""

import numpy as np

from libc.math cimport exp, tanh


cdef inline double _sig(double x) nogil:
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    cdef double e = exp(x)
    return e / (1.0 + e)


def lstm_seq_forward(W, U, b, X):
    cdef double[:, ::1] Wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef double[:, ::1] Uv = np.ascontiguousarray(U, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)

    cdef Py_ssize_t T = Xv.shape[0]
    cdef Py_ssize_t d = Xv.shape[1]
    cdef Py_ssize_t h = Uv.shape[1]

    H_arr = np.zeros((T, h))
    G_arr = np.zeros((T, 4 * h))
    C_arr = np.zeros((T, h))
    TC_arr = np.zeros((T, h))
    cdef double[:, ::1] Hv = H_arr
    cdef double[:, ::1] Gv = G_arr
    cdef double[:, ::1] Cv = C_arr
    cdef double[:, ::1] TCv = TC_arr

    z_arr = np.zeros(4 * h)
    cdef double[::1] z = z_arr
    cdef Py_ssize_t t, r, k
    cdef double acc, i_g, f_g, o_g, g_g, c_val, tc_val

    for t in range(T):
        for r in range(4 * h):
            acc = bv[r]
            for k in range(d):
                acc += Wv[r, k] * Xv[t, k]
            if t > 0:
                for k in range(h):
                    acc += Uv[r, k] * Hv[t - 1, k]
            z[r] = acc
        for k in range(h):
            i_g = _sig(z[k])
            f_g = _sig(z[h + k])
            o_g = _sig(z[2 * h + k])
            g_g = tanh(z[3 * h + k])
            if t > 0:
                c_val = f_g * Cv[t - 1, k] + i_g * g_g
            else:
                c_val = i_g * g_g
            tc_val = tanh(c_val)
            Gv[t, k] = i_g
            Gv[t, h + k] = f_g
            Gv[t, 2 * h + k] = o_g
            Gv[t, 3 * h + k] = g_g
            Cv[t, k] = c_val
            TCv[t, k] = tc_val
            Hv[t, k] = o_g * tc_val
    return H_arr, G_arr, C_arr, TC_arr


def lstm_seq_backward(W, U, X, H, G, C, TC, dH):
    cdef double[:, ::1] Wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef double[:, ::1] Uv = np.ascontiguousarray(U, dtype=np.float64)
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] Hv = np.ascontiguousarray(H, dtype=np.float64)
    cdef double[:, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef double[:, ::1] Cv = np.ascontiguousarray(C, dtype=np.float64)
    cdef double[:, ::1] TCv = np.ascontiguousarray(TC, dtype=np.float64)
    cdef double[:, ::1] dHv = np.ascontiguousarray(dH, dtype=np.float64)

    cdef Py_ssize_t T = Xv.shape[0]
    cdef Py_ssize_t d = Xv.shape[1]
    cdef Py_ssize_t h = Uv.shape[1]

    dX_arr = np.zeros((T, d))
    dW_arr = np.zeros((4 * h, d))
    dU_arr = np.zeros((4 * h, h))
    db_arr = np.zeros(4 * h)
    cdef double[:, ::1] dXv = dX_arr
    cdef double[:, ::1] dWv = dW_arr
    cdef double[:, ::1] dUv = dU_arr
    cdef double[::1] dbv = db_arr

    carry_arr = np.zeros(h)
    dc_arr = np.zeros(h)
    dz_arr = np.zeros(4 * h)
    cdef double[::1] carry = carry_arr
    cdef double[::1] dc = dc_arr
    cdef double[::1] dz = dz_arr

    cdef Py_ssize_t t, r, k
    cdef double dh_val, i_g, f_g, o_g, g_g, tc_val, c_prev, dcv, do_v, di_v, df_v, dg_v, dzr

    for t in range(T - 1, -1, -1):
        for k in range(h):
            dh_val = dHv[t, k] + carry[k]
            i_g = Gv[t, k]
            f_g = Gv[t, h + k]
            o_g = Gv[t, 2 * h + k]
            g_g = Gv[t, 3 * h + k]
            tc_val = TCv[t, k]
            c_prev = Cv[t - 1, k] if t > 0 else 0.0
            do_v = dh_val * tc_val
            dcv = dc[k] + dh_val * o_g * (1.0 - tc_val * tc_val)
            di_v = dcv * g_g
            df_v = dcv * c_prev
            dg_v = dcv * i_g
            dz[k] = di_v * i_g * (1.0 - i_g)
            dz[h + k] = df_v * f_g * (1.0 - f_g)
            dz[2 * h + k] = do_v * o_g * (1.0 - o_g)
            dz[3 * h + k] = dg_v * (1.0 - g_g * g_g)
            dc[k] = dcv * f_g
        for r in range(4 * h):
            dzr = dz[r]
            dbv[r] += dzr
            for k in range(d):
                dWv[r, k] += dzr * Xv[t, k]
            if t > 0:
                for k in range(h):
                    dUv[r, k] += dzr * Hv[t - 1, k]
        for k in range(d):
            dh_val = 0.0
            for r in range(4 * h):
                dh_val += Wv[r, k] * dz[r]
            dXv[t, k] = dh_val
        for k in range(h):
            dh_val = 0.0
            for r in range(4 * h):
                dh_val += Uv[r, k] * dz[r]
            carry[k] = dh_val
    return dX_arr, dW_arr, dU_arr, db_arr
