# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled split-search kernels for boosted-tree training.

Mirrors respews.gbdt._fallback exactly: same candidate set (boundaries
between distinct non-missing values), same gain formula, same tie-breaking
(lowest feature index, lowest threshold, missing-left preferred on ties).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isnan

cnp.import_array()


def find_best_split(
    double[:, ::1] X,
    double[::1] g,
    double[::1] h,
    int[:, ::1] sorted_rows,
    double G,
    double H,
    int min_child_samples,
    double lam,
):
    """Best (feature, threshold) over every feature of one node.

    `sorted_rows` holds, per feature, the node's row indices ordered by
    ascending feature value with missing-value rows at the tail.  Returns
    (feature, threshold, gain, default_left, n_left); feature is -1 when no
    valid split exists.
    """
    cdef Py_ssize_t m = sorted_rows.shape[0]
    cdef Py_ssize_t k = sorted_rows.shape[1]
    cdef Py_ssize_t j, i, nn
    cdef int row
    cdef double parent, best_gain, best_thr, gain_l, gain_r, thr
    cdef double gl, hl, gm, hm, x0, x1
    cdef double GL, HL, GR, HR
    cdef long nm, nl_total, nr_total
    cdef int best_feature = -1
    cdef bint best_default_left = True
    cdef long best_n_left = 0

    parent = G * G / (H + lam)
    best_gain = 0.0
    best_thr = 0.0

    for j in range(m):
        # missing block sits at the tail of the sorted order
        nn = k
        gm = 0.0
        hm = 0.0
        while nn > 0 and isnan(X[sorted_rows[j, nn - 1], j]):
            row = sorted_rows[j, nn - 1]
            gm += g[row]
            hm += h[row]
            nn -= 1
        if nn < 2:
            continue
        nm = k - nn
        gl = 0.0
        hl = 0.0
        for i in range(nn - 1):
            row = sorted_rows[j, i]
            gl += g[row]
            hl += h[row]
            x0 = X[row, j]
            x1 = X[sorted_rows[j, i + 1], j]
            if x0 == x1:
                continue
            thr = 0.5 * (x0 + x1)
            if thr >= x1:
                thr = x0
            # missing routed left
            GL = gl + gm
            HL = hl + hm
            GR = G - GL
            HR = H - HL
            nl_total = i + 1 + nm
            nr_total = k - nl_total
            gain_l = -1.0
            if nl_total >= min_child_samples and nr_total >= min_child_samples:
                gain_l = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent)
            # missing routed right
            GL = gl
            HL = hl
            GR = G - gl
            HR = H - hl
            nl_total = i + 1
            nr_total = k - nl_total
            gain_r = -1.0
            if nl_total >= min_child_samples and nr_total >= min_child_samples:
                gain_r = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent)
            if gain_l >= gain_r:
                if gain_l > best_gain:
                    best_gain = gain_l
                    best_feature = j
                    best_thr = thr
                    best_default_left = True
                    best_n_left = i + 1 + nm
            else:
                if gain_r > best_gain:
                    best_gain = gain_r
                    best_feature = j
                    best_thr = thr
                    best_default_left = False
                    best_n_left = i + 1
    return int(best_feature), float(best_thr), float(best_gain), bool(best_default_left), int(best_n_left)


def partition_rows(
    double[:, ::1] X,
    int[:, ::1] sorted_rows,
    int feature,
    double threshold,
    bint default_left,
    char[::1] scratch,
):
    """Stable partition of every feature's sorted row list by the chosen split.

    `scratch` is a caller-owned byte array of length n_rows(X), reused across
    calls.  Returns (left, right) arrays of shape (m, k_left) / (m, k_right).
    """
    cdef Py_ssize_t m = sorted_rows.shape[0]
    cdef Py_ssize_t k = sorted_rows.shape[1]
    cdef Py_ssize_t i, j
    cdef int row
    cdef double v
    cdef long n_left = 0

    for i in range(k):
        row = sorted_rows[0, i]
        v = X[row, feature]
        if isnan(v):
            scratch[row] = 1 if default_left else 0
        elif v <= threshold:
            scratch[row] = 1
        else:
            scratch[row] = 0
        if scratch[row]:
            n_left += 1

    left_np = np.empty((m, n_left), dtype=np.int32)
    right_np = np.empty((m, k - n_left), dtype=np.int32)
    cdef int[:, ::1] left = left_np
    cdef int[:, ::1] right = right_np
    cdef Py_ssize_t li, ri
    for j in range(m):
        li = 0
        ri = 0
        for i in range(k):
            row = sorted_rows[j, i]
            if scratch[row]:
                left[j, li] = row
                li += 1
            else:
                right[j, ri] = row
                ri += 1
    return left_np, right_np
