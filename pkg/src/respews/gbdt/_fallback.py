"""Pure-numpy split-search kernels; same contract as the compiled module.

Kept semantically identical to _split_core.pyx: identical candidate
thresholds, gain formula and tie-breaking.  Gains are accumulated with
cumulative sums here, so last-bit float rounding can differ from the
sequential compiled scan; each implementation is deterministic on its own.
"""

from __future__ import annotations

import numpy as np


def find_best_split(X, g, h, sorted_rows, G, H, min_child_samples, lam):
    m, k = sorted_rows.shape
    parent = G * G / (H + lam)
    best = (-1, 0.0, 0.0, True, 0)  # feature, threshold, gain, default_left, n_left
    best_gain = 0.0
    for j in range(m):
        rows = sorted_rows[j]
        x = X[rows, j]
        nn = int(np.sum(~np.isnan(x)))
        if nn < 2:
            continue
        nm = k - nn
        gm = float(np.sum(g[rows[nn:]]))
        hm = float(np.sum(h[rows[nn:]]))
        xv = x[:nn]
        gl = np.cumsum(g[rows[:nn]])[:-1]
        hl = np.cumsum(h[rows[:nn]])[:-1]
        boundary = xv[:-1] != xv[1:]
        if not boundary.any():
            continue
        thr = 0.5 * (xv[:-1] + xv[1:])
        thr = np.where(thr >= xv[1:], xv[:-1], thr)
        n_left = np.arange(1, nn)

        def side_gain(GL, HL, nl):
            GR = G - GL
            HR = H - HL
            nr = k - nl
            gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent)
            ok = (nl >= min_child_samples) & (nr >= min_child_samples) & boundary
            return np.where(ok, gain, -1.0)

        gain_l = side_gain(gl + gm, hl + hm, n_left + nm)
        gain_r = side_gain(gl, hl, n_left)
        use_left = gain_l >= gain_r
        gain = np.where(use_left, gain_l, gain_r)
        i = int(np.argmax(gain))  # first occurrence wins: lowest threshold
        if gain[i] > best_gain:
            best_gain = float(gain[i])
            nl = int(n_left[i] + nm) if use_left[i] else int(n_left[i])
            best = (j, float(thr[i]), best_gain, bool(use_left[i]), nl)
    return best


def partition_rows(X, sorted_rows, feature, threshold, default_left, scratch):
    rows = sorted_rows[0]
    v = X[rows, feature]
    missing = np.isnan(v)
    goes_left = np.where(missing, bool(default_left), v <= threshold)
    scratch[rows] = goes_left
    mask = scratch[sorted_rows].astype(bool)
    n_left = int(goes_left.sum())
    m = sorted_rows.shape[0]
    left = sorted_rows[mask].reshape(m, n_left)
    right = sorted_rows[~mask].reshape(m, sorted_rows.shape[1] - n_left)
    return left, right
