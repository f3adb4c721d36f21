"""Pure-Python/numpy versions of the compiled kernels."""
import numpy as np


def candidate_pairs(ta, tb, lo, hi):
    ta = np.asarray(ta, dtype=float)
    tb = np.asarray(tb, dtype=float)
    start = np.searchsorted(tb, ta + lo, side="left")
    stop = np.searchsorted(tb, ta + hi, side="right")
    counts = np.maximum(stop - start, 0)
    ci = np.repeat(np.arange(len(ta), dtype=np.int64), counts)
    offsets = np.arange(counts.sum(), dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    cj = np.repeat(start.astype(np.int64), counts) + offsets
    return ci, cj


def greedy_select(order, ci, cj, na, nb):
    used_a = np.zeros(na, dtype=bool)
    used_b = np.zeros(nb, dtype=bool)
    keep = np.zeros(len(order), dtype=bool)
    ci = ci.tolist()
    cj = cj.tolist()
    for c in order.tolist():
        i, j = ci[c], cj[c]
        if used_a[i] or used_b[j]:
            continue
        used_a[i] = True
        used_b[j] = True
        keep[c] = True
    return keep


def deadtime_filter(t, dead):
    t = np.asarray(t, dtype=float)
    keep = np.zeros(len(t), dtype=bool)
    if len(t) == 0:
        return keep
    keep[0] = True
    last = t[0]
    for i, ti in enumerate(t.tolist()[1:], start=1):
        if ti - last >= dead:
            keep[i] = True
            last = ti
    return keep


def diagonal_sums(m):
    m = np.asarray(m)
    na, nb = m.shape
    k = (np.arange(na)[:, None] - np.arange(nb)[None, :] + nb - 1).ravel()
    if np.iscomplexobj(m):
        re = np.bincount(k, weights=m.real.ravel(), minlength=na + nb - 1)
        im = np.bincount(k, weights=m.imag.ravel(), minlength=na + nb - 1)
        return re + 1j * im
    return np.bincount(k, weights=m.astype(float).ravel(), minlength=na + nb - 1)
