"""Trainable layers with cached forward state and hand-derived backward.

Each layer owns its parameters and gradient buffers as name -> array
dicts, so optimizers and checkpoints can treat every model uniformly.
Calling ``backward`` before ``forward`` raises ``StateError``.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyInputError, ShapeError, StateError
from . import backend
from .functional import activation_grad, apply_activation


class Dense:
    """Affine map + pointwise activation over row vectors."""

    def __init__(self, in_dim, out_dim, activation="tanh", rng=None, name="dense", use_bias=True):
        rng = rng or np.random.default_rng(0)
        self.activation = activation
        self.name = name
        self.use_bias = use_bias
        self.params = {f"{name}.W": rng.uniform(-0.1, 0.1, size=(out_dim, in_dim))}
        if use_bias:
            self.params[f"{name}.b"] = rng.uniform(-0.1, 0.1, size=out_dim)
        self._zero_b = np.zeros(out_dim)
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._cache = None

    @property
    def W(self):
        return self.params[f"{self.name}.W"]

    @property
    def b(self):
        return self.params[f"{self.name}.b"] if self.use_bias else self._zero_b

    def forward(self, X):
        """X is (T, in_dim) or (in_dim,); output matches the leading shape."""
        X = np.asarray(X, dtype=float)
        squeeze = X.ndim == 1
        X2 = X[None, :] if squeeze else X
        if X2.shape[1] != self.W.shape[1]:
            raise ShapeError(
                f"input has dim {X2.shape[1]} but layer expects {self.W.shape[1]}"
            )
        Y = apply_activation(X2 @ self.W.T + self.b, self.activation)
        self._cache = (X2, Y, squeeze)
        return Y[0] if squeeze else Y

    def backward(self, dY):
        if self._cache is None:
            raise StateError("Dense.backward called before forward")
        X2, Y, squeeze = self._cache
        dY2 = np.asarray(dY, dtype=float)
        if squeeze:
            dY2 = dY2[None, :]
        dZ = dY2 * activation_grad(Y, self.activation)
        self.grads[f"{self.name}.W"] += dZ.T @ X2
        if self.use_bias:
            self.grads[f"{self.name}.b"] += dZ.sum(axis=0)
        dX = dZ @ self.W
        return dX[0] if squeeze else dX

    def zero_grads(self):
        for g in self.grads.values():
            g[...] = 0.0


class LstmSeq:
    """Unidirectional LSTM over a full sequence (zero initial state)."""

    def __init__(self, input_dim, hidden_dim, rng=None, name="lstm"):
        rng = rng or np.random.default_rng(0)
        self.name = name
        self.hidden_dim = hidden_dim
        W = rng.uniform(-0.1, 0.1, size=(4 * hidden_dim, input_dim))
        U = rng.uniform(-0.1, 0.1, size=(4 * hidden_dim, hidden_dim))
        b = rng.uniform(-0.1, 0.1, size=4 * hidden_dim)
        b[hidden_dim : 2 * hidden_dim] = 1.0  # forget-gate bias
        self.params = {f"{name}.W": W, f"{name}.U": U, f"{name}.b": b}
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._cache = None

    def forward(self, X):
        X = np.ascontiguousarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise EmptyInputError(f"{self.name}: empty input sequence")
        if X.shape[1] != self.params[f"{self.name}.W"].shape[1]:
            raise ShapeError(
                f"input has dim {X.shape[1]} but cell expects "
                f"{self.params[f'{self.name}.W'].shape[1]}"
            )
        W, U, b = (self.params[f"{self.name}.{k}"] for k in ("W", "U", "b"))
        H, G, C, TC = backend.lstm_seq_forward(W, U, b, X)
        self._cache = (X, H, G, C, TC)
        return H

    def backward(self, dH):
        if self._cache is None:
            raise StateError(f"{self.name}.backward called before forward")
        X, H, G, C, TC = self._cache
        W, U = self.params[f"{self.name}.W"], self.params[f"{self.name}.U"]
        dX, dW, dU, db = backend.lstm_seq_backward(W, U, X, H, G, C, TC, np.ascontiguousarray(dH, dtype=float))
        self.grads[f"{self.name}.W"] += dW
        self.grads[f"{self.name}.U"] += dU
        self.grads[f"{self.name}.b"] += db
        return dX

    def zero_grads(self):
        for g in self.grads.values():
            g[...] = 0.0


class Blstm:
    """Forward + backward LSTM scans; outputs concatenated per step."""

    def __init__(self, input_dim, hidden_dim, rng=None, name="blstm"):
        rng = rng or np.random.default_rng(0)
        self.fwd = LstmSeq(input_dim, hidden_dim, rng, name=f"{name}.fwd")
        self.bwd = LstmSeq(input_dim, hidden_dim, rng, name=f"{name}.bwd")
        self.hidden_dim = hidden_dim
        self._T = None

    @property
    def params(self):
        return {**self.fwd.params, **self.bwd.params}

    @property
    def grads(self):
        return {**self.fwd.grads, **self.bwd.grads}

    def forward(self, X):
        """Returns (T, 2h): forward states beside reversed-scan states."""
        X = np.asarray(X, dtype=float)
        Hf = self.fwd.forward(X)
        Hb = self.bwd.forward(X[::-1])[::-1]
        self._T = X.shape[0]
        return np.concatenate([Hf, Hb], axis=1)

    def backward(self, dHcat):
        if self._T is None:
            raise StateError("Blstm.backward called before forward")
        h = self.hidden_dim
        dXf = self.fwd.backward(dHcat[:, :h])
        dXb = self.bwd.backward(dHcat[::-1, h:])[::-1]
        return dXf + dXb

    def zero_grads(self):
        self.fwd.zero_grads()
        self.bwd.zero_grads()


class L2Normalize:
    """Row-wise x / ||x||; zero rows pass through unchanged."""

    def __init__(self):
        self._cache = None

    def forward(self, X):
        X = np.asarray(X, dtype=float)
        norms = np.linalg.norm(X, axis=-1, keepdims=True)
        safe = np.where(norms == 0.0, 1.0, norms)
        Y = X / safe
        self._cache = (Y, safe)
        return Y

    def backward(self, dY):
        if self._cache is None:
            raise StateError("L2Normalize.backward called before forward")
        Y, safe = self._cache
        dY = np.asarray(dY, dtype=float)
        inner = np.sum(dY * Y, axis=-1, keepdims=True)
        return (dY - Y * inner) / safe


def merge_params(*layers):
    out = {}
    for layer in layers:
        out.update(layer.params)
    return out


def merge_grads(*layers):
    out = {}
    for layer in layers:
        out.update(layer.grads)
    return out


def dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    """Inverted-dropout mask: 0 with probability ``rate``, else 1/(1-rate)."""
    if rate <= 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)
