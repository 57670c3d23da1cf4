"""Stateless numeric ops: activations, dense layer, LSTM cell, cosine.

These are the building blocks the layer classes wrap for training; they
are also usable directly for one-off computation and in tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyInputError, ShapeError
from . import backend
from .kernels_py import _sigmoid

ACTIVATIONS = ("tanh", "sigmoid", "identity")


def apply_activation(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "tanh":
        return np.tanh(z)
    if activation == "sigmoid":
        return _sigmoid(z)
    if activation == "identity":
        return z
    raise ValueError(f"unknown activation {activation!r}; expected one of {ACTIVATIONS}")


def activation_grad(y: np.ndarray, activation: str) -> np.ndarray:
    """d(activation)/d(preactivation) expressed through the output ``y``."""
    if activation == "tanh":
        return 1.0 - y * y
    if activation == "sigmoid":
        return y * (1.0 - y)
    if activation == "identity":
        return np.ones_like(y)
    raise ValueError(f"unknown activation {activation!r}; expected one of {ACTIVATIONS}")


def dense_forward(x, W, b, activation="identity"):
    """activation(W x + b) for a single input vector."""
    x = np.asarray(x, dtype=float)
    W = np.asarray(W, dtype=float)
    b = np.asarray(b, dtype=float)
    if x.shape[0] != W.shape[1]:
        raise ShapeError(f"input has dim {x.shape[0]} but weight matrix has {W.shape[1]} columns")
    if b.shape[0] != W.shape[0]:
        raise ShapeError(f"bias has dim {b.shape[0]} but weight matrix has {W.shape[0]} rows")
    return apply_activation(W @ x + b, activation)


@dataclass
class LstmCellParams:
    """Fused LSTM cell parameters.

    ``W`` (4h, input_dim) maps the input, ``U`` (4h, h) the previous hidden
    state, ``b`` (4h,) the bias; rows are gate chunks in i|f|o|g order.
    """

    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.U.shape[1]

    def validate(self):
        h = self.hidden_dim
        if self.W.shape[0] != 4 * h:
            raise ShapeError(f"W has {self.W.shape[0]} rows but 4*hidden is {4 * h}")
        if self.U.shape[0] != 4 * h:
            raise ShapeError(f"U has {self.U.shape[0]} rows but 4*hidden is {4 * h}")
        if self.b.shape[0] != 4 * h:
            raise ShapeError(f"b has dim {self.b.shape[0]} but 4*hidden is {4 * h}")


def init_lstm_params(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> LstmCellParams:
    """Uniform [-0.1, 0.1] init with the forget-gate bias set to 1."""
    W = rng.uniform(-0.1, 0.1, size=(4 * hidden_dim, input_dim))
    U = rng.uniform(-0.1, 0.1, size=(4 * hidden_dim, hidden_dim))
    b = rng.uniform(-0.1, 0.1, size=4 * hidden_dim)
    b[hidden_dim : 2 * hidden_dim] = 1.0
    return LstmCellParams(W, U, b)


def lstm_step(params: LstmCellParams, h_prev, c_prev, x):
    """One LSTM step; returns the new ``(h, c)``."""
    params.validate()
    h_prev = np.asarray(h_prev, dtype=float)
    c_prev = np.asarray(c_prev, dtype=float)
    x = np.asarray(x, dtype=float)
    hd = params.hidden_dim
    if x.shape[0] != params.input_dim:
        raise ShapeError(f"input has dim {x.shape[0]} but cell expects {params.input_dim}")
    if h_prev.shape[0] != hd:
        raise ShapeError(f"h_prev has dim {h_prev.shape[0]} but cell hidden is {hd}")
    if c_prev.shape[0] != hd:
        raise ShapeError(f"c_prev has dim {c_prev.shape[0]} but cell hidden is {hd}")
    z = params.W @ x + params.U @ h_prev + params.b
    i = _sigmoid(z[:hd])
    f = _sigmoid(z[hd : 2 * hd])
    o = _sigmoid(z[2 * hd : 3 * hd])
    g = np.tanh(z[3 * hd :])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c


def blstm_sequence(fwd: LstmCellParams, bwd: LstmCellParams, inputs):
    """Bidirectional scan over ``inputs`` from zero states.

    Returns a list of ``(h_fwd_t, h_bwd_t)`` pairs, one per input, where
    the backward states come from a right-to-left scan.
    """
    X = np.asarray(inputs, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInputError("blstm_sequence requires a nonempty sequence of vectors")
    Hf, _, _, _ = backend.lstm_seq_forward(fwd.W, fwd.U, fwd.b, X)
    Hb_rev, _, _, _ = backend.lstm_seq_forward(bwd.W, bwd.U, bwd.b, X[::-1])
    Hb = Hb_rev[::-1]
    return [(Hf[t], Hb[t]) for t in range(X.shape[0])]


def cosine(a, b) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"first vector has dim {a.shape[0]} but second has dim {b.shape[0]}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
