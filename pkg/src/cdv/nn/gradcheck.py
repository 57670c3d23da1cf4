"""Central finite-difference gradient checking.

The checker perturbs every entry of every named array in place, so the
loss closure must read the arrays by reference (not hold copies).
"""

from __future__ import annotations

import numpy as np


def numerical_grads(loss_fn, arrays: dict[str, np.ndarray], h: float = 1e-4) -> dict[str, np.ndarray]:
    """Central differences of ``loss_fn()`` w.r.t. every array entry."""
    out = {}
    for name, arr in arrays.items():
        grad = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = loss_fn()
            flat[idx] = orig - h
            down = loss_fn()
            flat[idx] = orig
            gflat[idx] = (up - down) / (2.0 * h)
        out[name] = grad
    return out


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / max(||a|| + ||n||, tiny) — the standard gradcheck metric."""
    diff = np.linalg.norm(analytic - numeric)
    scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    return float(diff / max(scale, 1e-12))


def max_relative_error(
    loss_fn,
    arrays: dict[str, np.ndarray],
    analytic: dict[str, np.ndarray],
    h: float = 1e-4,
) -> float:
    numeric = numerical_grads(loss_fn, arrays, h=h)
    return max(relative_error(analytic[name], numeric[name]) for name in arrays)
