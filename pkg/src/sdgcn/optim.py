"""Adam with L2 weight decay added to the gradient."""
from __future__ import annotations

import numpy as np


def _real(a: np.ndarray) -> np.ndarray:
    # complex arrays are updated as interleaved (re, im) float pairs
    return a.view(np.float64) if np.iscomplexobj(a) else a


class Adam:
    def __init__(self, params: dict, lr: float = 1e-3, weight_decay: float = 1e-5,
                 betas=(0.9, 0.999), eps: float = 1e-8, frozen_imag=()):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.frozen_imag = set(frozen_imag)
        self.step_count = 0
        self.m = {k: np.zeros_like(_real(v)) for k, v in params.items()}
        self.v = {k: np.zeros_like(_real(v)) for k, v in params.items()}

    def step(self, grads: dict) -> None:
        """Update ``self.params`` in place."""
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for name, value in self.params.items():
            p = _real(value)
            g = _real(np.asarray(grads[name], dtype=value.dtype)) + self.weight_decay * p
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            if name in self.frozen_imag:
                update[..., 1::2] = 0.0
            p -= update
