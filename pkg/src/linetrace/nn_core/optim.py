"""Mean-squared-error loss and the Adam optimizer."""

import math

import numpy as np


def mse_loss(pred, target):
    """Mean over all elements of squared error, plus its gradient w.r.t. pred.

    For (n, 2) velocity outputs this is the mean over all 2n components; the
    gradient is 2*(pred - target)/(2n).
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    return loss, 2.0 * diff / diff.size


class AdamState:
    """Adam with bias correction; moments match the shapes of the parameters."""

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-7):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        """One in-place update: t += 1, then the bias-corrected Adam rule."""
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ValueError("params/grads do not match optimizer state")
        for g in grads:
            if not math.isfinite(float(np.abs(g).sum())):
                raise FloatingPointError("non-finite gradient; aborting update")
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m[...] = self.beta1 * m + (1.0 - self.beta1) * g
            v[...] = self.beta2 * v + (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def adam_step(params, grads, state: AdamState):
    """Functional form of AdamState.step (updates params/state in place)."""
    state.step(params, grads)
    return params, state
