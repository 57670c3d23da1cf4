"""Training objectives and their gradients.

The two discourse losses operate on per-step prediction/target pairs for
the entity and aspect views; the step distance is

    d_t = ||eps_hat_t - eps_t||_2 + ||alpha_hat_t - alpha_t||_2

The plain loss is the mean of d_t; the robust variant smooths each term to
sqrt(1 + (d_t/4)^2) - 1, which stays below d_t/4 and flattens gradients
near zero error.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateLabelsError, EmptyInputError, ShapeError


def _step_distances(pred_eps, pred_alpha, target_eps, target_alpha):
    pe = np.asarray(pred_eps, dtype=float)
    pa = np.asarray(pred_alpha, dtype=float)
    te = np.asarray(target_eps, dtype=float)
    ta = np.asarray(target_alpha, dtype=float)
    if not (pe.shape[0] == pa.shape[0] == te.shape[0] == ta.shape[0]):
        raise ShapeError(
            f"sequence lengths differ: eps {pe.shape[0]}/{te.shape[0]}, "
            f"alpha {pa.shape[0]}/{ta.shape[0]}"
        )
    if pe.shape[0] == 0:
        raise EmptyInputError("loss over an empty sequence")
    if pe.shape != te.shape:
        raise ShapeError(f"entity dims differ: predicted {pe.shape} vs target {te.shape}")
    if pa.shape != ta.shape:
        raise ShapeError(f"aspect dims differ: predicted {pa.shape} vs target {ta.shape}")
    de = pe - te
    da = pa - ta
    ne = np.linalg.norm(de, axis=1)
    na = np.linalg.norm(da, axis=1)
    return de, da, ne, na


def plain_cdv_loss(pred_eps, pred_alpha, target_eps, target_alpha) -> float:
    _, _, ne, na = _step_distances(pred_eps, pred_alpha, target_eps, target_alpha)
    return float(np.mean(ne + na))


def robust_cdv_loss(pred_eps, pred_alpha, target_eps, target_alpha) -> float:
    _, _, ne, na = _step_distances(pred_eps, pred_alpha, target_eps, target_alpha)
    d = ne + na
    return float(np.mean(np.sqrt(1.0 + (d / 4.0) ** 2) - 1.0))


def _distance_grads(de, da, ne, na, weight):
    """d(loss)/d(pred) given per-step weights on d_t; zero at d = 0."""
    ue = np.divide(de, ne[:, None], out=np.zeros_like(de), where=ne[:, None] > 0)
    ua = np.divide(da, na[:, None], out=np.zeros_like(da), where=na[:, None] > 0)
    return weight[:, None] * ue, weight[:, None] * ua


def plain_cdv_loss_grad(pred_eps, pred_alpha, target_eps, target_alpha):
    de, da, ne, na = _step_distances(pred_eps, pred_alpha, target_eps, target_alpha)
    T = de.shape[0]
    loss = float(np.mean(ne + na))
    weight = np.full(T, 1.0 / T)
    g_eps, g_alpha = _distance_grads(de, da, ne, na, weight)
    return loss, g_eps, g_alpha


def robust_cdv_loss_grad(pred_eps, pred_alpha, target_eps, target_alpha):
    de, da, ne, na = _step_distances(pred_eps, pred_alpha, target_eps, target_alpha)
    T = de.shape[0]
    d = ne + na
    root = np.sqrt(1.0 + (d / 4.0) ** 2)
    loss = float(np.mean(root - 1.0))
    weight = d / (16.0 * root) / T
    g_eps, g_alpha = _distance_grads(de, da, ne, na, weight)
    return loss, g_eps, g_alpha


def _positives_mask(positives, m: int) -> np.ndarray:
    mask = np.zeros(m, dtype=bool)
    arr = np.asarray(list(positives), dtype=int) if not isinstance(positives, np.ndarray) else positives
    if arr.dtype == bool:
        if arr.shape[0] != m:
            raise ShapeError(f"label mask has dim {arr.shape[0]} but scores have dim {m}")
        mask = arr.copy()
    else:
        if arr.size and (arr.min() < 0 or arr.max() >= m):
            raise ShapeError(f"label index out of range for {m} scores: {arr.min()}..{arr.max()}")
        mask[arr] = True
    return mask


def bpmll_loss(scores, positives) -> float:
    loss, _ = bpmll_loss_grad(scores, positives)
    return loss


def bpmll_loss_grad(scores, positives):
    """Pairwise exponential ranking loss over positive/negative label pairs.

    L = (1 / (|Y| * |Ybar|)) * sum_{p in Y} sum_{q in Ybar} exp(-(s_p - s_q))
    """
    s = np.asarray(scores, dtype=float)
    m = s.shape[0]
    mask = _positives_mask(positives, m)
    n_pos = int(mask.sum())
    n_neg = m - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError(
            f"BPMLL needs both positive and negative labels, got {n_pos} positives of {m}"
        )
    a = np.exp(-s[mask])       # per-positive factors
    bvals = np.exp(s[~mask])   # per-negative factors
    denom = n_pos * n_neg
    loss = float(a.sum() * bvals.sum() / denom)
    grad = np.zeros_like(s)
    grad[mask] = -a * bvals.sum() / denom
    grad[~mask] = bvals * a.sum() / denom
    return loss, grad
