"""Oxygen-hemoglobin dissociation curve: forward model and closed-form inverse.

The forward model maps arterial oxygen partial pressure (PaO2, mmHg) to
hemoglobin oxygen saturation (fraction).  The inverse recovers PaO2 from a
saturation value and is used as the parametric non-linear estimation
baseline ("pnl-baseline") throughout the package.
"""

from __future__ import annotations

import numpy as np

from respews.errors import DomainError

# S(p) = 1 / (C / (p^3 + 150 p) + 1)
_CURVE_C = 23400.0
_CUBIC_LIN = 150.0


def severinghaus_sao2(pao2):
    """Saturation fraction for a PaO2 value (mmHg).

    Accepts scalars or arrays; strictly increasing with range (0, 1).
    Raises DomainError for any non-positive input.
    """
    p = np.asarray(pao2, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p <= 0.0):
        raise DomainError("pao2 must be positive and finite")
    s = 1.0 / (_CURVE_C / (p**3 + _CUBIC_LIN * p) + 1.0)
    return float(s) if np.isscalar(pao2) or np.ndim(pao2) == 0 else s


def ellis_pao2(sao2):
    """PaO2 (mmHg) for a saturation fraction in (0, 1): the pnl-baseline.

    Closed-form (Cardano) real root of p^3 + 150 p - K = 0 with
    K = 23400 s / (1 - s), followed by one Newton polish step so the
    round trip with `severinghaus_sao2` holds to < 1e-6 over the
    clinical range.
    """
    s = np.asarray(sao2, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s <= 0.0) or np.any(s >= 1.0):
        raise DomainError("sao2 must lie strictly inside (0, 1)")
    half_k = 0.5 * _CURVE_C * s / (1.0 - s)
    b3 = (_CUBIC_LIN / 3.0) ** 3
    root = np.sqrt(half_k**2 + b3)
    p = np.cbrt(half_k + root) + np.cbrt(half_k - root)
    # Newton step on f(p) = p^3 + 150 p - 2*half_k
    p = p - (p**3 + _CUBIC_LIN * p - 2.0 * half_k) / (3.0 * p**2 + _CUBIC_LIN)
    return float(p) if np.isscalar(sao2) or np.ndim(sao2) == 0 else p
