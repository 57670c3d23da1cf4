"""Adam with decoupled weight decay and per-epoch learning-rate decay."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError


class AdamState:
    """Optimizer state over a dict of named parameter arrays.

    Weight decay is decoupled: parameters shrink by lr * wd * p before the
    Adam delta is applied. ``advance_epoch`` multiplies the learning rate
    by the decay factor.
    """

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.0,
        lr_decay: float = 1.0,
    ):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.lr_decay = lr_decay
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        """One in-place Adam update over all named parameters."""
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for name, p in params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise ShapeError(
                    f"gradient for {name!r} has shape {g.shape} but parameter has {p.shape}"
                )
            if self.m[name].shape != p.shape:
                raise ShapeError(
                    f"moment for {name!r} has shape {self.m[name].shape} but parameter has {p.shape}"
                )
            if self.weight_decay:
                p -= self.lr * self.weight_decay * p
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
        return params

    def advance_epoch(self):
        self.lr *= self.lr_decay


def adam_step(state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
    """Functional wrapper around :meth:`AdamState.step`."""
    return state.step(params, grads)
