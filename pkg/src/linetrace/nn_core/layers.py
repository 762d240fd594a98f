"""Trainable layers with explicit forward/backward passes on float64 arrays.

Shape convention: a single sample is a rank-2 array (per the per-sample
shapes of the two architectures, e.g. (1, 1024)); a batch prepends one
leading axis, giving rank 3. Layers operate on the trailing axes and
broadcast over any leading ones:

- dense, batchnorm, activation: feature axis is the last axis
- conv1d, maxpool_axis0, flatten: operate on the last two axes (A, B)

Every layer caches what its backward pass needs during forward; backward
consumes and clears that cache, writes parameter gradients into `grads`,
and returns the gradient with respect to its input.
"""

import math

import numpy as np


def softsign(x):
    """Elementwise x / (1 + |x|)."""
    x = np.asarray(x, dtype=np.float64)
    return x / (1.0 + np.abs(x))


def softsign_grad(x):
    """Derivative of softsign: 1 / (1 + |x|)^2."""
    d = 1.0 + np.abs(np.asarray(x, dtype=np.float64))
    return 1.0 / (d * d)


def relu(x):
    """Elementwise max(0, x); the subgradient at exactly 0 is taken as 0."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0)


ACTIVATIONS = ("relu", "softsign")


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _sum_to(arr, keep_last_axes):
    """Sum over all axes except the trailing `keep_last_axes`."""
    reduce_axes = tuple(range(arr.ndim - keep_last_axes))
    return arr.sum(axis=reduce_axes) if reduce_axes else arr.copy()


class Layer:
    kind = "layer"

    def __init__(self):
        self.params: list[np.ndarray] = []
        self.grads: list[np.ndarray] = []
        self.state: list[np.ndarray] = []  # non-trainable (running stats)
        self._cache = None

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.params) + sum(s.size for s in self.state)

    def settings(self) -> dict:
        return {}

    def out_shape(self, shape):
        return tuple(shape)

    def forward(self, x, train):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def _take_cache(self):
        if self._cache is None:
            raise RuntimeError(f"{self.kind}: backward called without a stored forward pass")
        cache, self._cache = self._cache, None
        return cache


class Dense(Layer):
    kind = "dense"

    def __init__(self, in_dim, units, rng=None):
        super().__init__()
        self.in_dim, self.units = int(in_dim), int(units)
        rng = rng or np.random.default_rng(0)
        w = glorot_uniform(rng, (self.in_dim, self.units), self.in_dim, self.units)
        b = np.zeros(self.units)
        self.params = [w, b]
        self.grads = [np.zeros_like(w), np.zeros_like(b)]

    def settings(self):
        return {"units": self.units, "in_dim": self.in_dim}

    def out_shape(self, shape):
        if shape[-1] != self.in_dim:
            raise ValueError(
                f"dense: input shape {tuple(shape)} incompatible with weights "
                f"({self.in_dim}, {self.units})"
            )
        return tuple(shape[:-1]) + (self.units,)

    def forward(self, x, train):
        w, b = self.params
        if x.shape[-1] != self.in_dim:
            raise ValueError(
                f"dense: input shape {x.shape} incompatible with weights {w.shape}"
            )
        self._cache = x
        return x @ w + b

    def backward(self, dout):
        x = self._take_cache()
        w, _ = self.params
        self.grads[0][...] = np.einsum("...i,...o->io", x, dout, optimize=True)
        self.grads[1][...] = _sum_to(dout, 1)
        return dout @ w.T


class Conv1d(Layer):
    """Valid-padding, stride-1 1D convolution over one of the two sample axes.

    orientation "channels_first": sample (C, L) -> (filters, L - k + 1);
    the first axis holds channels and the filter axis leads in the output.
    orientation "channels_last": sample (L, C) -> (L - k + 1, filters);
    the last axis holds channels and the filter axis trails.
    Weights are (filters, channels, k) in both orientations.
    """

    kind = "conv1d"

    def __init__(self, in_channels, filters, kernel, orientation, rng=None):
        super().__init__()
        if orientation not in ("channels_first", "channels_last"):
            raise ValueError(f"unknown conv1d orientation {orientation!r}")
        self.in_channels, self.filters = int(in_channels), int(filters)
        self.kernel, self.orientation = int(kernel), orientation
        rng = rng or np.random.default_rng(0)
        fan_in = self.in_channels * self.kernel
        fan_out = self.filters * self.kernel
        w = glorot_uniform(rng, (self.filters, self.in_channels, self.kernel), fan_in, fan_out)
        b = np.zeros(self.filters)
        self.params = [w, b]
        self.grads = [np.zeros_like(w), np.zeros_like(b)]

    def settings(self):
        return {
            "filters": self.filters,
            "kernel": self.kernel,
            "orientation": self.orientation,
            "in_channels": self.in_channels,
        }

    def _split_shape(self, shape):
        a, b = shape[-2], shape[-1]
        if self.orientation == "channels_first":
            c, length = a, b
        else:
            length, c = a, b
        if c != self.in_channels:
            raise ValueError(
                f"conv1d: input shape {tuple(shape)} has {c} channels, layer expects "
                f"{self.in_channels}"
            )
        if self.kernel > length:
            raise ValueError(
                f"conv1d: kernel {self.kernel} larger than convolved extent {length} "
                f"in input shape {tuple(shape)}"
            )
        return length

    def out_shape(self, shape):
        length = self._split_shape(shape)
        span = length - self.kernel + 1
        if self.orientation == "channels_first":
            return tuple(shape[:-2]) + (self.filters, span)
        return tuple(shape[:-2]) + (span, self.filters)

    def forward(self, x, train):
        length = self._split_shape(x.shape)
        span = length - self.kernel + 1
        w, b = self.params
        self._cache = x
        if self.orientation == "channels_first":
            # windows (..., C, span, k); one BLAS-backed contraction over (C, k)
            win = np.lib.stride_tricks.sliding_window_view(x, self.kernel, axis=-1)
            return np.einsum("...clt,fct->...fl", win, w, optimize=True) + b[:, None]
        # windows (..., span, C, k)
        win = np.lib.stride_tricks.sliding_window_view(x, self.kernel, axis=-2)
        return np.einsum("...lct,fct->...lf", win, w, optimize=True) + b

    def backward(self, dout):
        x = self._take_cache()
        w, _ = self.params
        span = dout.shape[-1] if self.orientation == "channels_first" else dout.shape[-2]
        dx = np.zeros_like(x)
        if self.orientation == "channels_first":
            win = np.lib.stride_tricks.sliding_window_view(x, self.kernel, axis=-1)
            self.grads[0][...] = np.einsum("...fl,...clt->fct", dout, win, optimize=True)
            for t in range(self.kernel):
                dx[..., :, t : t + span] += np.matmul(w[:, :, t].T, dout)
            self.grads[1][...] = _sum_to(dout, 2).sum(axis=1)
        else:
            win = np.lib.stride_tricks.sliding_window_view(x, self.kernel, axis=-2)
            self.grads[0][...] = np.einsum("...lf,...lct->fct", dout, win, optimize=True)
            for t in range(self.kernel):
                dx[..., t : t + span, :] += np.matmul(dout, w[:, :, t])
            self.grads[1][...] = _sum_to(dout, 2).sum(axis=0)
        return dx


class MaxPoolAxis0(Layer):
    """Max over non-overlapping groups of `pool` along the sample's first axis.

    (A, B) -> (A // pool, B); remainder rows are dropped and receive zero
    gradient. Ties go to the first maximal element (deterministic).
    """

    kind = "maxpool_axis0"

    def __init__(self, pool):
        super().__init__()
        if pool < 1:
            raise ValueError(f"pool size must be >= 1, got {pool}")
        self.pool = int(pool)

    def settings(self):
        return {"pool": self.pool}

    def out_shape(self, shape):
        a = shape[-2] // self.pool
        if a < 1:
            raise ValueError(f"maxpool: pool {self.pool} leaves no rows from shape {tuple(shape)}")
        return tuple(shape[:-2]) + (a, shape[-1])

    def forward(self, x, train):
        a, b = x.shape[-2], x.shape[-1]
        groups = a // self.pool
        xr = x[..., : groups * self.pool, :].reshape(x.shape[:-2] + (groups, self.pool, b))
        out = xr.max(axis=-2)
        self._cache = (x.shape, xr, out)
        return out

    def backward(self, dout):
        in_shape, xr, out = self._take_cache()
        a, b = in_shape[-2], in_shape[-1]
        groups = a // self.pool
        dx = np.empty(in_shape)
        dx[..., groups * self.pool :, :] = 0.0  # dropped remainder rows
        dxr = dx[..., : groups * self.pool, :].reshape(in_shape[:-2] + (groups, self.pool, b))
        # route gradient to the first maximal element of each group; every
        # group slot is written exactly once
        taken = np.zeros(out.shape, dtype=bool)
        for t in range(self.pool):
            hit = (xr[..., t, :] == out) & ~taken
            dxr[..., t, :] = np.where(hit, dout, 0.0)
            taken |= hit
        return dx


class BatchNorm(Layer):
    """Per-feature normalization over all leading axes; feature axis is last.

    Train mode normalizes by batch statistics and updates running stats with
    momentum; eval mode uses the running stats. The parameter count is 4 per
    feature: gamma, beta, running mean, running variance.
    """

    kind = "batchnorm"

    def __init__(self, features, momentum=0.99, eps=1e-3):
        super().__init__()
        self.features = int(features)
        self.momentum, self.eps = float(momentum), float(eps)
        self.params = [np.ones(self.features), np.zeros(self.features)]  # gamma, beta
        self.grads = [np.zeros(self.features), np.zeros(self.features)]
        self.state = [np.zeros(self.features), np.ones(self.features)]  # mean, var
        self.updated = False

    def settings(self):
        return {"features": self.features, "momentum": self.momentum, "eps": self.eps}

    def out_shape(self, shape):
        if shape[-1] != self.features:
            raise ValueError(
                f"batchnorm: input shape {tuple(shape)} has {shape[-1]} features, "
                f"layer expects {self.features}"
            )
        return tuple(shape)

    def forward(self, x, train):
        gamma, beta = self.params
        axes = tuple(range(x.ndim - 1))
        if train:
            mu = x.mean(axis=axes)
            var = x.var(axis=axes)
            ivar = 1.0 / np.sqrt(var + self.eps)
            xmu = x - mu
            xhat = xmu * ivar
            m = self.momentum
            self.state[0][...] = m * self.state[0] + (1.0 - m) * mu
            self.state[1][...] = m * self.state[1] + (1.0 - m) * var
            self.updated = True
            self._cache = ("train", xmu, ivar, xhat, x.size // self.features)
        else:
            if not self.updated:
                import warnings

                warnings.warn("batchnorm eval before any train-mode update; using init stats")
            ivar = 1.0 / np.sqrt(self.state[1] + self.eps)
            xhat = (x - self.state[0]) * ivar
            self._cache = ("eval", ivar, xhat)
        return gamma * xhat + beta

    def backward(self, dout):
        cache = self._take_cache()
        gamma, _ = self.params
        axes = tuple(range(dout.ndim - 1))
        if cache[0] == "eval":
            _, ivar, xhat = cache
            self.grads[0][...] = (dout * xhat).sum(axis=axes)
            self.grads[1][...] = dout.sum(axis=axes)
            return dout * gamma * ivar
        _, xmu, ivar, xhat, n = cache
        self.grads[0][...] = (dout * xhat).sum(axis=axes)
        self.grads[1][...] = dout.sum(axis=axes)
        dxhat = dout * gamma
        dvar = (dxhat * xmu).sum(axis=axes) * (-0.5) * ivar**3
        dmu = (-dxhat * ivar).sum(axis=axes) + dvar * (-2.0 / n) * xmu.sum(axis=axes)
        return dxhat * ivar + dvar * (2.0 / n) * xmu + dmu / n


class Dropout(Layer):
    """Inverted dropout: train zeroes with probability `rate` and rescales
    survivors by 1/(1-rate); eval is the identity."""

    kind = "dropout"

    def __init__(self, rate, rng=None):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = float(rate)
        self.rng = rng or np.random.default_rng(0)

    def settings(self):
        return {"rate": self.rate}

    def forward(self, x, train):
        if not train or self.rate == 0.0:
            self._cache = (None,)
            return x
        # float32 stream halves the drawn bytes; the Bernoulli mask is the same
        # kind of object either way and stays seed-deterministic
        keep = self.rng.random(x.shape, dtype=np.float32) >= self.rate
        self._cache = (keep,)
        out = x * keep
        out *= 1.0 / (1.0 - self.rate)
        return out

    def backward(self, dout):
        (keep,) = self._take_cache()
        if keep is None:
            return dout
        dx = dout * keep
        dx *= 1.0 / (1.0 - self.rate)
        return dx


class Flatten(Layer):
    """Collapse the last two sample axes (A, B) into (1, A*B)."""

    kind = "flatten"

    def out_shape(self, shape):
        return tuple(shape[:-2]) + (1, shape[-2] * shape[-1])

    def forward(self, x, train):
        self._cache = x.shape
        return x.reshape(self.out_shape(x.shape))

    def backward(self, dout):
        return dout.reshape(self._take_cache())


class Activation(Layer):
    kind = "activation"

    def __init__(self, fn):
        super().__init__()
        if fn not in ACTIVATIONS:
            raise ValueError(f"unknown activation {fn!r}; expected one of {ACTIVATIONS}")
        self.fn = fn

    def settings(self):
        return {"fn": self.fn}

    def forward(self, x, train):
        if self.fn == "relu":
            self._cache = x > 0
            return relu(x)
        denom = np.abs(x)
        denom += 1.0
        self._cache = denom
        return x / denom

    def backward(self, dout):
        cache = self._take_cache()
        if self.fn == "relu":
            return dout * cache
        dx = dout / cache
        dx /= cache
        return dx
