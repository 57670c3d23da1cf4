"""Pure-numpy LSTM sequence kernels (fallback backend).

The compiled extension in ``_kernels.pyx`` implements the same two entry
points with identical signatures and gate layout; ``cdv.nn.backend``
picks whichever is available. Gate rows are fused in i, f, o, g order
(chunks of ``hidden`` rows each). Scans start from a zero state.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_seq_forward(W, U, b, X):
    """Run an LSTM over ``X`` (T, input_dim) from a zero state.

    Returns ``(H, G, C, TC)``: hidden states (T, h), post-activation gates
    (T, 4h) in i|f|o|g order, cell states (T, h) and tanh(cell) (T, h).
    """
    T = X.shape[0]
    h = U.shape[1]
    H = np.zeros((T, h))
    G = np.zeros((T, 4 * h))
    C = np.zeros((T, h))
    TC = np.zeros((T, h))
    h_prev = np.zeros(h)
    c_prev = np.zeros(h)
    for t in range(T):
        z = W @ X[t] + U @ h_prev + b
        i = _sigmoid(z[:h])
        f = _sigmoid(z[h : 2 * h])
        o = _sigmoid(z[2 * h : 3 * h])
        g = np.tanh(z[3 * h :])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        H[t] = o * tc
        G[t, :h] = i
        G[t, h : 2 * h] = f
        G[t, 2 * h : 3 * h] = o
        G[t, 3 * h :] = g
        C[t] = c
        TC[t] = tc
        h_prev = H[t]
        c_prev = c
    return H, G, C, TC


def lstm_seq_backward(W, U, X, H, G, C, TC, dH):
    """Backpropagate through :func:`lstm_seq_forward`.

    ``dH`` (T, h) is the upstream gradient on every hidden state. Returns
    ``(dX, dW, dU, db)``.
    """
    T, h = dH.shape
    dX = np.zeros_like(X)
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * h)
    dh_carry = np.zeros(h)
    dc = np.zeros(h)
    for t in range(T - 1, -1, -1):
        dh = dH[t] + dh_carry
        i = G[t, :h]
        f = G[t, h : 2 * h]
        o = G[t, 2 * h : 3 * h]
        g = G[t, 3 * h :]
        tc = TC[t]
        c_prev = C[t - 1] if t > 0 else np.zeros(h)
        h_prev = H[t - 1] if t > 0 else np.zeros(h)
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                do * o * (1.0 - o),
                dg * (1.0 - g * g),
            ]
        )
        dW += np.outer(dz, X[t])
        dU += np.outer(dz, h_prev)
        db += dz
        dX[t] = W.T @ dz
        dh_carry = U.T @ dz
        dc = dc * f
    return dX, dW, dU, db
