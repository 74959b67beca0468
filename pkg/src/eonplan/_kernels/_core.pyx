# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled planner kernels.

Semantics mirror ``_fallback`` exactly (same dtypes, same edge cases); the
equivalence test suite runs both backends against each other.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, log

cnp.import_array()

BACKEND_NAME = "compiled"


def feasible_starts(occ_rows, int width):
    occ = np.ascontiguousarray(occ_rows, dtype=np.uint8)
    cdef const unsigned char[:, ::1] occ_v = occ
    cdef Py_ssize_t n_rows = occ_v.shape[0]
    cdef Py_ssize_t n_slots = occ_v.shape[1]
    if width < 1 or width > n_slots:
        return np.empty(0, dtype=np.int64)
    out = np.empty(n_slots, dtype=np.int64)
    cdef long long[::1] out_v = out
    cdef Py_ssize_t i, j, run = 0, found = 0
    cdef bint col_free
    for j in range(n_slots):
        col_free = True
        for i in range(n_rows):
            if occ_v[i, j]:
                col_free = False
                break
        if col_free:
            run += 1
        else:
            run = 0
        if run >= width:
            out_v[found] = j - width + 1
            found += 1
    return out[:found].copy()


def xt_counts(segments, long long self_demand, Py_ssize_t n_slots):
    counts = np.zeros(n_slots, dtype=np.int64)
    seg = np.ascontiguousarray(segments, dtype=np.int64)
    if seg.size == 0:
        return counts
    cdef const long long[:, ::1] seg_v = seg
    cdef long long[::1] counts_v = counts
    cdef Py_ssize_t m = seg_v.shape[0]
    cdef Py_ssize_t r
    cdef long long start, end, egress
    # Difference-array accumulation of the kept blocks, as in the fallback.
    diff = np.zeros(n_slots + 1, dtype=np.int64)
    cdef long long[::1] diff_v = diff
    for r in range(m):
        if seg_v[r, 0] == self_demand:
            continue
        egress = seg_v[r, 5]
        if seg_v[r, 1] == egress or seg_v[r, 2] == egress:
            continue
        start = seg_v[r, 3]
        end = seg_v[r, 4]
        diff_v[start] += 1
        diff_v[end + 1] -= 1
    cdef long long running = 0
    for r in range(n_slots):
        running += diff_v[r]
        counts_v[r] = running
    return counts


def window_max(values, Py_ssize_t width):
    vals = np.ascontiguousarray(values, dtype=np.int64)
    cdef const long long[::1] vals_v = vals
    cdef Py_ssize_t n = vals_v.shape[0]
    if width < 1 or width > n:
        return np.empty(0, dtype=np.int64)
    out = np.empty(n - width + 1, dtype=np.int64)
    cdef long long[::1] out_v = out
    cdef Py_ssize_t i, j
    cdef long long best
    for i in range(n - width + 1):
        best = vals_v[i]
        for j in range(i + 1, i + width):
            if vals_v[j] > best:
                best = vals_v[j]
        out_v[i] = best
    return out


def nli_neighbor_lnsum(pos_centers, nbr_center, nbr_half, nbr_weight):
    pos = np.ascontiguousarray(pos_centers, dtype=np.float64)
    ctr = np.ascontiguousarray(nbr_center, dtype=np.float64)
    half = np.ascontiguousarray(nbr_half, dtype=np.float64)
    weight = np.ascontiguousarray(nbr_weight, dtype=np.float64)
    cdef const double[::1] pos_v = pos
    cdef const double[::1] ctr_v = ctr
    cdef const double[::1] half_v = half
    cdef const double[::1] w_v = weight
    cdef Py_ssize_t n_pos = pos_v.shape[0]
    cdef Py_ssize_t n_nbr = ctr_v.shape[0]
    out = np.zeros(n_pos, dtype=np.float64)
    if n_pos == 0 or n_nbr == 0:
        return out
    cdef double[::1] out_v = out
    cdef Py_ssize_t p, j
    cdef double delta, h, total
    for p in range(n_pos):
        total = 0.0
        for j in range(n_nbr):
            delta = fabs(pos_v[p] - ctr_v[j])
            h = half_v[j]
            if delta <= h:
                total = INFINITY
                break
            total += w_v[j] * log((delta + h) / (delta - h))
        out_v[p] = total
    return out
