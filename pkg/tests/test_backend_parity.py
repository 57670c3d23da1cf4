"""Compiled and numpy kernels must agree on forward and backward passes."""

import numpy as np
import pytest

from cdv.nn import backend_name
from cdv.nn import kernels_py

try:
    from cdv.nn import _kernels
except ImportError:
    _kernels = None


def test_backend_selected():
    assert backend_name() in ("compiled", "python")


@pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")
def test_forward_parity():
    rng = np.random.default_rng(0)
    W = rng.normal(size=(16, 5))
    U = rng.normal(size=(16, 4))
    b = rng.normal(size=16)
    X = rng.normal(size=(7, 5))
    ref = kernels_py.lstm_seq_forward(W, U, b, X)
    got = _kernels.lstm_seq_forward(W, U, b, X)
    for r, g in zip(ref, got):
        np.testing.assert_allclose(g, r, rtol=1e-12, atol=1e-12)


@pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")
def test_backward_parity():
    rng = np.random.default_rng(1)
    W = rng.normal(size=(12, 3))
    U = rng.normal(size=(12, 3))
    b = rng.normal(size=12)
    X = rng.normal(size=(6, 3))
    dH = rng.normal(size=(6, 3))
    H, G, C, TC = kernels_py.lstm_seq_forward(W, U, b, X)
    ref = kernels_py.lstm_seq_backward(W, U, X, H, G, C, TC, dH)
    got = _kernels.lstm_seq_backward(W, U, X, H, G, C, TC, dH)
    for r, g in zip(ref, got):
        np.testing.assert_allclose(g, r, rtol=1e-10, atol=1e-12)


def test_forward_deterministic():
    rng = np.random.default_rng(2)
    from cdv.nn import backend

    W = rng.normal(size=(8, 2))
    U = rng.normal(size=(8, 2))
    b = rng.normal(size=8)
    X = rng.normal(size=(5, 2))
    a = backend.lstm_seq_forward(W, U, b, X)
    c = backend.lstm_seq_forward(W, U, b, X)
    for x, y in zip(a, c):
        assert np.array_equal(x, y)
