"""Windowed feature primitives over gridded series.

All computations at grid index i use data at indices <= i only (trailing
windows), so features are causal by construction.  Summary statistics are
population-style; the trend is the least-squares slope in units per hour.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

S_PER_H = 3600.0


def _rolling_sum(x: np.ndarray, w: int) -> np.ndarray:
    c = np.concatenate([[0.0], np.cumsum(x)])
    lo = np.maximum(np.arange(len(x)) - w + 1, 0)
    return c[np.arange(1, len(x) + 1)] - c[lo]


def rolling_summary(values: np.ndarray, grid_step: int, window_s: int) -> dict[str, np.ndarray]:
    """{mean, std, trend, min, max} over the trailing window (t-window, t].

    Values are NaN where missing; outputs are NaN where the window holds no
    defined value (trend additionally needs two).
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    w = max(int(window_s // grid_step), 1)
    defined = np.isfinite(v)
    dv = np.where(defined, v, 0.0)
    cnt = _rolling_sum(defined.astype(float), w)
    s1 = _rolling_sum(dv, w)
    s2 = _rolling_sum(dv * dv, w)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(cnt > 0, s1 / cnt, np.nan)
        std = np.where(cnt > 0, np.sqrt(np.maximum(s2 / cnt - mean * mean, 0.0)), np.nan)

    pad = np.full(w - 1, np.nan)
    vw = sliding_window_view(np.concatenate([pad, v]), w)
    with np.errstate(invalid="ignore"):
        has = cnt > 0
        vmin = np.full(n, np.nan)
        vmax = np.full(n, np.nan)
        if has.any():
            vmin[has] = np.nanmin(vw[has], axis=1)
            vmax[has] = np.nanmax(vw[has], axis=1)

    t_h = np.arange(n, dtype=float) * (grid_step / S_PER_H)
    dw = sliding_window_view(np.concatenate([np.zeros(w - 1), defined.astype(float)]), w)
    tw = sliding_window_view(np.concatenate([t_h[0] - np.arange(w - 1, 0, -1) * (grid_step / S_PER_H), t_h]), w)
    vw0 = np.where(np.isnan(vw), 0.0, vw)
    with np.errstate(invalid="ignore", divide="ignore"):
        nw = dw.sum(axis=1)
        tbar = np.where(nw > 0, (tw * dw).sum(axis=1) / nw, 0.0)
        vbar = np.where(nw > 0, (vw0 * dw).sum(axis=1) / nw, 0.0)
        tc = (tw - tbar[:, None]) * dw
        num = (tc * (vw0 - vbar[:, None])).sum(axis=1)
        den = (tc * tc).sum(axis=1)
        trend = np.where((nw >= 2) & (den > 0), num / den, np.nan)
    return {"mean": mean, "std": std, "trend": trend, "min": vmin, "max": vmax}


def expanding_summary(values: np.ndarray, grid_step: int) -> dict[str, np.ndarray]:
    """Same five statistics over the expanding window [0, t]."""
    v = np.asarray(values, dtype=float)
    n = v.size
    defined = np.isfinite(v)
    dv = np.where(defined, v, 0.0)
    cnt = np.cumsum(defined.astype(float))
    s1 = np.cumsum(dv)
    s2 = np.cumsum(dv * dv)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(cnt > 0, s1 / cnt, np.nan)
        std = np.where(cnt > 0, np.sqrt(np.maximum(s2 / cnt - mean * mean, 0.0)), np.nan)
    vmin = np.fmin.accumulate(np.where(defined, v, np.inf))
    vmax = np.fmax.accumulate(np.where(defined, v, -np.inf))
    vmin = np.where(cnt > 0, vmin, np.nan)
    vmax = np.where(cnt > 0, vmax, np.nan)

    # slope via running sums; expanding windows start at t=0 so the normal
    # equations stay well conditioned without centering
    t_h = np.arange(n, dtype=float) * (grid_step / S_PER_H)
    st = np.cumsum(t_h * defined)
    stt = np.cumsum(t_h * t_h * defined)
    sv = s1
    stv = np.cumsum(t_h * dv)
    with np.errstate(invalid="ignore", divide="ignore"):
        den = cnt * stt - st * st
        num = cnt * stv - st * sv
        trend = np.where((cnt >= 2) & (den > 0), num / den, np.nan)
    return {"mean": mean, "std": std, "trend": trend, "min": vmin, "max": vmax}


def summarize(values: np.ndarray, times_s: np.ndarray) -> dict[str, float]:
    """Single-window reference form of the five summary functions.

    Operates on one explicit window (used directly by tests and small
    callers; the vectorized rolling/expanding variants above must agree
    with it).
    """
    v = np.asarray(values, dtype=float)
    t = np.asarray(times_s, dtype=float) / S_PER_H
    defined = np.isfinite(v)
    if not defined.any():
        return {"mean": np.nan, "std": np.nan, "trend": np.nan, "min": np.nan, "max": np.nan}
    vd = v[defined]
    td = t[defined]
    out = {
        "mean": float(np.mean(vd)),
        "std": float(np.std(vd)),
        "min": float(np.min(vd)),
        "max": float(np.max(vd)),
    }
    if len(vd) >= 2 and np.ptp(td) > 0:
        tc = td - td.mean()
        out["trend"] = float(np.sum(tc * (vd - vd.mean())) / np.sum(tc * tc))
    else:
        out["trend"] = np.nan
    return out


def intensity(
    raw_times: np.ndarray | None,
    grid_times: np.ndarray,
    grid_step: int,
    window_s: int,
) -> dict[str, np.ndarray]:
    """Measurement-intensity features from raw timestamps.

    time_to_last_s: seconds since the most recent raw measurement at or
    before t (NaN if none).  Densities are counts per hour, over the
    trailing window and over the stay so far.
    """
    n = len(grid_times)
    if raw_times is None or len(raw_times) == 0:
        return {
            "time_to_last_s": np.full(n, np.nan),
            "density_window": np.zeros(n),
            "density_stay": np.zeros(n),
        }
    rt = np.asarray(raw_times, dtype=np.int64)
    idx = np.searchsorted(rt, grid_times, side="right")
    has = idx > 0
    ttl = np.full(n, np.nan)
    ttl[has] = grid_times[has] - rt[idx[has] - 1]
    in_window = idx - np.searchsorted(rt, grid_times - window_s, side="right")
    elapsed_h = np.maximum(grid_times, grid_step) / S_PER_H
    return {
        "time_to_last_s": ttl,
        "density_window": in_window / (window_s / S_PER_H),
        "density_stay": idx / elapsed_h,
    }


def instability_fractions(
    values: np.ndarray,
    bands: tuple[tuple[float, float], ...],
    grid_step: int,
    window_s: int | None,
) -> list[np.ndarray]:
    """Fraction of defined window points falling inside each severity band.

    `window_s` None means the expanding stay window.  Band membership is
    inclusive at both endpoints.
    """
    v = np.asarray(values, dtype=float)
    defined = np.isfinite(v)
    if window_s is None:
        cnt = np.cumsum(defined.astype(float))
    else:
        w = max(int(window_s // grid_step), 1)
        cnt = _rolling_sum(defined.astype(float), w)
    out = []
    for lo, hi in bands:
        hit = (defined & (v >= lo) & (v <= hi)).astype(float)
        s = np.cumsum(hit) if window_s is None else _rolling_sum(hit, max(int(window_s // grid_step), 1))
        with np.errstate(invalid="ignore", divide="ignore"):
            out.append(np.where(cnt > 0, s / cnt, np.nan))
    return out
