"""Network assembly from layer specs, forward/backward orchestration, and
bit-exact model file serialization."""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import layers as L

MAGIC = b"LTNET\n"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    """Declarative layer description; dimensions are inferred at build time."""

    kind: str
    settings: tuple = field(default_factory=tuple)  # sorted (key, value) pairs

    def setting(self, key):
        return dict(self.settings)[key]


def _spec(kind, **kw):
    return LayerSpec(kind, tuple(sorted(kw.items())))


def dense(units):
    return _spec("dense", units=int(units))


def conv1d(filters, kernel, orientation):
    return _spec("conv1d", filters=int(filters), kernel=int(kernel), orientation=orientation)


def maxpool_axis0(pool):
    return _spec("maxpool_axis0", pool=int(pool))


def dropout(rate):
    return _spec("dropout", rate=float(rate))


def batchnorm():
    return _spec("batchnorm")


def flatten():
    return _spec("flatten")


def activation(fn):
    return _spec("activation", fn=fn)


class Network:
    """An ordered layer stack with a train/eval mode and a dropout RNG.

    Build with `Network.build(specs, input_shape, seed)`; the per-sample
    input shape (rank 2, e.g. (1, 1024)) drives dimension inference. Forward
    accepts a single sample (rank 2) or a batch with one leading axis
    (rank 3). Any non-finite value leaving a layer raises immediately,
    naming the layer.
    """

    def __init__(self, layer_objs, input_shape, seed, mode="train", rng=None):
        self.layers = layer_objs
        self.input_shape = tuple(input_shape)
        self.seed = int(seed)
        self.mode = mode
        self.rng = rng if rng is not None else np.random.default_rng(self.seed)
        for lyr in self.layers:
            if isinstance(lyr, L.Dropout):
                lyr.rng = self.rng
        self._forward_done = False

    @classmethod
    def build(cls, specs, input_shape=(1, 1024), seed=0):
        rng = np.random.default_rng(seed)
        shape = tuple(input_shape)
        objs = []
        for spec in specs:
            s = dict(spec.settings)
            if spec.kind == "dense":
                lyr = L.Dense(shape[-1], s["units"], rng=rng)
            elif spec.kind == "conv1d":
                a, b = shape[-2], shape[-1]
                channels = a if s["orientation"] == "channels_first" else b
                lyr = L.Conv1d(channels, s["filters"], s["kernel"], s["orientation"], rng=rng)
            elif spec.kind == "maxpool_axis0":
                lyr = L.MaxPoolAxis0(s["pool"])
            elif spec.kind == "batchnorm":
                lyr = L.BatchNorm(shape[-1], **{k: s[k] for k in s if k in ("momentum", "eps")})
            elif spec.kind == "dropout":
                lyr = L.Dropout(s["rate"])
            elif spec.kind == "flatten":
                lyr = L.Flatten()
            elif spec.kind == "activation":
                lyr = L.Activation(s["fn"])
            else:
                raise ValueError(f"unknown layer kind {spec.kind!r}")
            shape = lyr.out_shape(shape)  # validates compatibility
            objs.append(lyr)
        return cls(objs, input_shape, seed, rng=rng)

    # -- mode ---------------------------------------------------------------

    def train_mode(self):
        self.mode = "train"
        return self

    def eval_mode(self):
        self.mode = "eval"
        return self

    def seed_dropout(self, seed):
        """Replace the dropout RNG (all dropout layers share one generator)."""
        self.rng = np.random.default_rng(seed)
        for lyr in self.layers:
            if isinstance(lyr, L.Dropout):
                lyr.rng = self.rng

    # -- shapes and parameters ------------------------------------------------

    def shape_trace(self, input_shape=None):
        """Per-layer (kind, output shape) for a per-sample input."""
        shape = tuple(input_shape or self.input_shape)
        trace = []
        for lyr in self.layers:
            shape = lyr.out_shape(shape)
            trace.append((lyr.kind, shape))
        return trace

    def out_shape(self, input_shape=None):
        shape = tuple(input_shape or self.input_shape)
        for lyr in self.layers:
            shape = lyr.out_shape(shape)
        return shape

    def params(self):
        return [p for lyr in self.layers for p in lyr.params]

    def grads(self):
        return [g for lyr in self.layers for g in lyr.grads]

    @property
    def param_count(self) -> int:
        return sum(lyr.param_count for lyr in self.layers)

    # -- passes ---------------------------------------------------------------

    @staticmethod
    def _check_finite(arr, where):
        # A full-array reduction: any NaN or +/-Inf makes the sum non-finite.
        if not math.isfinite(float(arr.sum())):
            raise FloatingPointError(f"non-finite values at {where}")

    def forward(self, x, train=None):
        train = (self.mode == "train") if train is None else train
        x = np.asarray(x, dtype=np.float64)
        self._check_finite(x, "network input")
        for i, lyr in enumerate(self.layers):
            x = lyr.forward(x, train)
            self._check_finite(x, f"layer {i} ({lyr.kind}) output")
        self._forward_done = True
        return x

    def backward(self, dout):
        """Reverse-mode pass; returns gradients aligned with `params()`."""
        if not self._forward_done:
            raise RuntimeError("backward called before forward")
        self._forward_done = False
        dout = np.asarray(dout, dtype=np.float64)
        for lyr in reversed(self.layers):
            dout = lyr.backward(dout)
        return self.grads()

    def predict(self, x):
        """Eval-mode forward regardless of current mode."""
        return self.forward(x, train=False)

    # -- serialization ----------------------------------------------------------

    def _tensors(self):
        """All persistent tensors in deterministic order: params then state."""
        for lyr in self.layers:
            yield from lyr.params
            yield from lyr.state

    def save(self, path):
        header = {
            "format_version": FORMAT_VERSION,
            "input_shape": list(self.input_shape),
            "seed": self.seed,
            "layers": [{"kind": lyr.kind, "settings": lyr.settings()} for lyr in self.layers],
            "batchnorm_updated": [
                lyr.updated for lyr in self.layers if isinstance(lyr, L.BatchNorm)
            ],
        }
        blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<I", len(blob)))
            f.write(blob)
            for t in self._tensors():
                f.write(struct.pack("<I", t.ndim))
                f.write(struct.pack(f"<{t.ndim}I", *t.shape))
                f.write(np.ascontiguousarray(t, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as f:
            if f.read(len(MAGIC)) != MAGIC:
                raise ValueError(f"{path}: not a model file (bad magic)")
            (hlen,) = struct.unpack("<I", f.read(4))
            header = json.loads(f.read(hlen).decode("utf-8"))
            if header.get("format_version") != FORMAT_VERSION:
                raise ValueError(f"{path}: unsupported format version")
            specs = []
            for entry in header["layers"]:
                s = dict(entry["settings"])
                s.pop("in_dim", None)
                s.pop("in_channels", None)
                if entry["kind"] == "batchnorm":
                    s.pop("features", None)
                specs.append(_spec(entry["kind"], **s))
            net = cls.build(specs, header["input_shape"], header["seed"])
            for t in net._tensors():
                (ndim,) = struct.unpack("<I", f.read(4))
                shape = struct.unpack(f"<{ndim}I", f.read(4 * ndim))
                if shape != t.shape:
                    raise ValueError(f"{path}: tensor shape {shape} != expected {t.shape}")
                data = np.frombuffer(f.read(8 * int(np.prod(shape))), dtype="<f8")
                t[...] = data.reshape(shape)
            flags = header.get("batchnorm_updated", [])
            bns = [lyr for lyr in net.layers if isinstance(lyr, L.BatchNorm)]
            for lyr, flag in zip(bns, flags):
                lyr.updated = bool(flag)
            trailing = f.read(1)
            if trailing:
                raise ValueError(f"{path}: trailing bytes after tensors")
        net.eval_mode()
        return net
