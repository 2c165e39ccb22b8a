# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Fused single-pass implementations of the hot jet-propagation kernels.

Drop-in replacements for ``numpy_ref``: same signatures, same None handling,
same arithmetic (so both backends agree to round-off).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport tanh as c_tanh

cnp.import_array()


def tanh_jet_fwd(object v_in, object g_in, object h_in):
    cdef double[:, ::1] v = np.ascontiguousarray(v_in, dtype=np.float64)
    cdef double[:, :, ::1] g = np.ascontiguousarray(g_in, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0], w = v.shape[1], d = g.shape[0]
    cdef cnp.ndarray t_arr = np.empty((n, w), dtype=np.float64)
    cdef cnp.ndarray g2_arr = np.empty((d, n, w), dtype=np.float64)
    cdef double[:, ::1] t = t_arr
    cdef double[:, :, ::1] g2 = g2_arr
    cdef double[:, :, :, ::1] h
    cdef double[:, :, :, ::1] h2
    cdef cnp.ndarray h2_arr = None
    cdef bint with_h = h_in is not None
    cdef Py_ssize_t i, j, a, b
    cdef double tv, tp, tpp

    if with_h:
        h = np.ascontiguousarray(h_in, dtype=np.float64)
        h2_arr = np.empty((d, d, n, w), dtype=np.float64)
        h2 = h2_arr

    for i in range(n):
        for j in range(w):
            tv = c_tanh(v[i, j])
            t[i, j] = tv
            tp = 1.0 - tv * tv
            for a in range(d):
                g2[a, i, j] = tp * g[a, i, j]
            if with_h:
                tpp = -2.0 * tv * tp
                for a in range(d):
                    for b in range(d):
                        h2[a, b, i, j] = tp * h[a, b, i, j] + tpp * g[a, i, j] * g[b, i, j]

    return t_arr, g2_arr, (h2_arr if with_h else None)


def tanh_jet_bwd(object t_in, object g_in, object h_in,
                 object dt_in, object dg2_in, object dh2_in):
    cdef double[:, ::1] t = np.ascontiguousarray(t_in, dtype=np.float64)
    cdef double[:, :, ::1] g = np.ascontiguousarray(g_in, dtype=np.float64)
    cdef Py_ssize_t n = t.shape[0], w = t.shape[1], d = g.shape[0]
    cdef cnp.ndarray dv_arr = np.zeros((n, w), dtype=np.float64)
    cdef double[:, ::1] dv = dv_arr
    cdef double[:, ::1] dt
    cdef double[:, :, ::1] dg2
    cdef double[:, :, :, ::1] dh2, h
    cdef cnp.ndarray dg_arr = None
    cdef cnp.ndarray dh_arr = None
    cdef double[:, :, ::1] dg
    cdef double[:, :, :, ::1] dh
    cdef bint has_dt = dt_in is not None
    cdef bint has_dg2 = dg2_in is not None
    cdef bint has_dh2 = dh2_in is not None
    cdef Py_ssize_t i, j, a, b
    cdef double tv, tp, tpp, tppp, acc, s

    if not (has_dt or has_dg2 or has_dh2):
        return dv_arr, None, None

    if has_dt:
        dt = np.ascontiguousarray(dt_in, dtype=np.float64)
    if has_dg2:
        dg2 = np.ascontiguousarray(dg2_in, dtype=np.float64)
    if has_dg2 or has_dh2:
        dg_arr = np.zeros((d, n, w), dtype=np.float64)
        dg = dg_arr
    if has_dh2:
        dh2 = np.ascontiguousarray(dh2_in, dtype=np.float64)
        h = np.ascontiguousarray(h_in, dtype=np.float64)
        dh_arr = np.empty((d, d, n, w), dtype=np.float64)
        dh = dh_arr

    for i in range(n):
        for j in range(w):
            tv = t[i, j]
            tp = 1.0 - tv * tv
            tpp = -2.0 * tv * tp
            acc = 0.0
            if has_dt:
                acc += dt[i, j] * tp
            if has_dg2:
                for a in range(d):
                    acc += tpp * dg2[a, i, j] * g[a, i, j]
                    dg[a, i, j] += tp * dg2[a, i, j]
            if has_dh2:
                tppp = -2.0 * (tp * tp + tv * tpp)
                for a in range(d):
                    for b in range(d):
                        s = dh2[a, b, i, j]
                        acc += tpp * s * h[a, b, i, j] + tppp * s * g[a, i, j] * g[b, i, j]
                        dg[a, i, j] += tpp * (s + dh2[b, a, i, j]) * g[b, i, j]
                        dh[a, b, i, j] = tp * s
            dv[i, j] = acc

    return dv_arr, dg_arr, dh_arr


def mul_outer_sym_fwd(object g_in, object c_in):
    cdef double[:, :, ::1] g = np.ascontiguousarray(g_in, dtype=np.float64)
    cdef double[:, :, ::1] c = np.ascontiguousarray(c_in, dtype=np.float64)
    cdef Py_ssize_t d = g.shape[0], n = g.shape[1], w = g.shape[2]
    cdef cnp.ndarray out_arr = np.empty((d, d, n, w), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, a, b
    for i in range(n):
        for j in range(w):
            for a in range(d):
                for b in range(d):
                    out[a, b, i, j] = g[a, i, j] * c[b, i, j] + g[b, i, j] * c[a, i, j]
    return out_arr


def mul_outer_sym_bwd(object c_in, object gout_in):
    cdef double[:, :, ::1] c = np.ascontiguousarray(c_in, dtype=np.float64)
    cdef double[:, :, :, ::1] gout = np.ascontiguousarray(gout_in, dtype=np.float64)
    cdef Py_ssize_t d = c.shape[0], n = c.shape[1], w = c.shape[2]
    cdef cnp.ndarray out_arr = np.zeros((d, n, w), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, a, b
    for i in range(n):
        for j in range(w):
            for a in range(d):
                for b in range(d):
                    out[a, i, j] += (gout[a, b, i, j] + gout[b, a, i, j]) * c[b, i, j]
    return out_arr
