# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Semantics mirror freqbin._pykernels exactly."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def candidate_pairs(const double[::1] ta, const double[::1] tb, double lo, double hi):
    """All (i, j) with ta[i] + lo <= tb[j] <= ta[i] + hi for sorted ta, tb."""
    cdef Py_ssize_t na = ta.shape[0], nb = tb.shape[0]
    cdef Py_ssize_t i, j, start = 0, count = 0, k = 0
    for i in range(na):
        while start < nb and tb[start] < ta[i] + lo:
            start += 1
        j = start
        while j < nb and tb[j] <= ta[i] + hi:
            count += 1
            j += 1
    ci_arr = np.empty(count, dtype=np.int64)
    cj_arr = np.empty(count, dtype=np.int64)
    cdef cnp.int64_t[::1] ci = ci_arr
    cdef cnp.int64_t[::1] cj = cj_arr
    start = 0
    for i in range(na):
        while start < nb and tb[start] < ta[i] + lo:
            start += 1
        j = start
        while j < nb and tb[j] <= ta[i] + hi:
            ci[k] = i
            cj[k] = j
            k += 1
            j += 1
    return ci_arr, cj_arr


def greedy_select(const cnp.int64_t[::1] order, const cnp.int64_t[::1] ci,
                  const cnp.int64_t[::1] cj, Py_ssize_t na, Py_ssize_t nb):
    """Accept candidates in the given order, each event used at most once."""
    cdef Py_ssize_t n = order.shape[0], k, c
    used_a_arr = np.zeros(na, dtype=np.uint8)
    used_b_arr = np.zeros(nb, dtype=np.uint8)
    keep_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] used_a = used_a_arr
    cdef cnp.uint8_t[::1] used_b = used_b_arr
    cdef cnp.uint8_t[::1] keep = keep_arr
    for k in range(n):
        c = order[k]
        if used_a[ci[c]] or used_b[cj[c]]:
            continue
        used_a[ci[c]] = 1
        used_b[cj[c]] = 1
        keep[c] = 1
    return keep_arr.astype(bool)


def deadtime_filter(const double[::1] t, double dead):
    """Keep events at least `dead` after the previous kept event."""
    cdef Py_ssize_t n = t.shape[0], i
    keep_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] keep = keep_arr
    cdef double last
    if n == 0:
        return keep_arr.astype(bool)
    keep[0] = 1
    last = t[0]
    for i in range(1, n):
        if t[i] - last >= dead:
            keep[i] = 1
            last = t[i]
    return keep_arr.astype(bool)


def diagonal_sums(cnp.ndarray m):
    """out[i - j + nb - 1] = sum of m[i, j] over each diagonal."""
    if np.iscomplexobj(m):
        return _diag_complex(np.ascontiguousarray(m, dtype=np.complex128))
    return _diag_real(np.ascontiguousarray(m, dtype=np.float64))


cdef _diag_real(const double[:, ::1] m):
    cdef Py_ssize_t na = m.shape[0], nb = m.shape[1], i, j
    out_arr = np.zeros(na + nb - 1, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(na):
        for j in range(nb):
            out[i - j + nb - 1] += m[i, j]
    return out_arr


cdef _diag_complex(const double complex[:, ::1] m):
    cdef Py_ssize_t na = m.shape[0], nb = m.shape[1], i, j
    out_arr = np.zeros(na + nb - 1, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    for i in range(na):
        for j in range(nb):
            out[i - j + nb - 1] += m[i, j]
    return out_arr
