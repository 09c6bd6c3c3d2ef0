"""Minimal fully connected classifier trained by plain SGD.

Parameters are a list of (W, b) pairs; hidden layers use rectified-linear
activations and the output is a numerically stabilized softmax. Losses accept
hard integer labels or probability-vector targets (needed for mixup) and all
reduce by the batch mean. Functions are pure: ``sgd_step`` returns new arrays.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .seeding import make_rng

Params = "list[tuple[np.ndarray, np.ndarray]]"

CCE_CLAMP = 1e-12

PARAMS_MAGIC = b"LGDP"


@dataclass(frozen=True)
class LossSpec:
    """Loss selector: 'cce', 'mae', or 'lq' with exponent q in (0, 1]."""

    kind: str
    q: float = 0.7

    def __post_init__(self):
        if self.kind not in ("cce", "mae", "lq"):
            raise ValueError(f"loss kind must be 'cce', 'mae' or 'lq', got {self.kind!r}")
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q must lie in (0, 1], got {self.q}")


@dataclass(frozen=True)
class MixupSpec:
    """Mixup switch and the Beta(alpha, alpha) shape for drawing lambda."""

    enabled: bool = False
    alpha: float = 8.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class TrainHyper:
    """SGD hyperparameters."""

    learning_rate: float = 0.1
    batch_size: int = 128
    dropout_rate: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")


def init_params(layer_dims, seed):
    """He-style init: W ~ N(0, 2/fan_in), biases zero. Deterministic per seed."""
    dims = list(layer_dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"layer_dims must chain at least input->output, got {dims}")
    rng = make_rng(seed)
    params = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w = rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
        params.append((w, np.zeros(fan_out)))
    return params


def layer_dims_of(params) -> list[int]:
    return [params[0][0].shape[0]] + [w.shape[1] for w, _ in params]


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def dropout_mask(shape, rate: float, seed) -> np.ndarray:
    """Inverted-dropout mask: keep with probability 1-rate, scale kept units by
    1/(1-rate) so the expected mask value is 1."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(shape)
    rng = make_rng(seed)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def _forward_cached(params, x, dropout_rate=0.0, dropout_rng=None):
    """Forward pass keeping pre-activations and dropout masks for backprop."""
    h = x
    pres, acts, masks = [], [h], []
    for i, (w, b) in enumerate(params):
        pre = h @ w + b
        if i < len(params) - 1:
            h = np.maximum(pre, 0.0)
            if dropout_rate > 0.0:
                mask = dropout_mask(h.shape, dropout_rate, dropout_rng)
                h = h * mask
            else:
                mask = None
            masks.append(mask)
        else:
            h = softmax(pre)
        pres.append(pre)
        acts.append(h)
    return pres, acts, masks


def forward(params, batch) -> np.ndarray:
    """Row-stochastic class probabilities (evaluation mode, no dropout)."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != params[0][0].shape[0]:
        raise ValueError(
            f"batch width {batch.shape} does not match input dim {params[0][0].shape[0]}"
        )
    _, acts, _ = _forward_cached(params, batch)
    return acts[-1]


def _as_targets(targets, k: int) -> np.ndarray:
    """Hard integer labels become one-hot rows; probability rows pass through."""
    targets = np.asarray(targets)
    if targets.ndim == 1:
        if targets.size and (targets.min() < 0 or targets.max() >= k):
            raise ValueError(f"labels out of range [0, {k})")
        t = np.zeros((targets.shape[0], k))
        t[np.arange(targets.shape[0]), targets.astype(np.int64)] = 1.0
        return t
    if targets.ndim == 2 and targets.shape[1] == k:
        return targets.astype(np.float64)
    raise ValueError(f"targets must be (n,) labels or (n, {k}) probabilities")


def loss(spec: LossSpec, probs: np.ndarray, targets) -> float:
    """Mean loss over the batch.

    cce: -sum_j t_j ln p_j (probabilities clamped at 1e-12)
    mae: sum_j |t_j - p_j|, i.e. 2(1 - p_y) for hard labels
    lq:  sum_j t_j (1 - p_j**q) / q
    """
    probs = np.asarray(probs, dtype=np.float64)
    t = _as_targets(targets, probs.shape[1])
    if spec.kind == "cce":
        per = -(t * np.log(np.clip(probs, CCE_CLAMP, None))).sum(axis=1)
    elif spec.kind == "mae":
        per = np.abs(t - probs).sum(axis=1)
    else:
        per = (t * (1.0 - probs**spec.q)).sum(axis=1) / spec.q
    return float(per.mean())


def _logit_grad(spec: LossSpec, probs: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Gradient of the mean loss w.r.t. the logits."""
    n = probs.shape[0]
    if spec.kind == "cce":
        g = probs - t
    elif spec.kind == "mae":
        s = np.sign(probs - t)
        g = probs * (s - (probs * s).sum(axis=1, keepdims=True))
    else:
        a = t * probs**spec.q
        g = probs * a.sum(axis=1, keepdims=True) - a
    return g / n


def backward(params, batch, targets, spec: LossSpec, dropout_rate=0.0, dropout_rng=None):
    """Analytic gradient of the mean loss; same shapes as ``params``."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != params[0][0].shape[0]:
        raise ValueError(
            f"batch width {batch.shape} does not match input dim {params[0][0].shape[0]}"
        )
    t = _as_targets(targets, params[-1][0].shape[1])
    pres, acts, masks = _forward_cached(params, batch, dropout_rate, dropout_rng)
    delta = _logit_grad(spec, acts[-1], t)
    grads = [None] * len(params)
    for i in range(len(params) - 1, -1, -1):
        grads[i] = (acts[i].T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = delta @ params[i][0].T
            if masks[i - 1] is not None:
                delta = delta * masks[i - 1]
            delta = delta * (pres[i - 1] > 0.0)
    return grads


def sgd_step(params, grads, lr: float):
    """One elementwise step w <- w - lr * g; returns new parameter arrays."""
    return [(w - lr * gw, b - lr * gb) for (w, b), (gw, gb) in zip(params, grads)]


def mixup_batch(x_a, y_a, x_b, y_b, k: int, lam: float | None = None, alpha: float = 8.0, rng=None):
    """Convex combination of two batches and of their one-hot targets.

    lam is drawn from Beta(alpha, alpha) when not supplied; a single lambda is
    used for the whole batch.
    """
    x_a, x_b = np.asarray(x_a, dtype=np.float64), np.asarray(x_b, dtype=np.float64)
    if x_a.shape != x_b.shape:
        raise ValueError("mixup pairs must share a shape")
    if lam is None:
        lam = float(make_rng(rng).beta(alpha, alpha))
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    t_a, t_b = _as_targets(y_a, k), _as_targets(y_b, k)
    return lam * x_a + (1.0 - lam) * x_b, lam * t_a + (1.0 - lam) * t_b


def predict(params, x) -> np.ndarray:
    """Argmax class per row; ties resolve to the smallest class index."""
    return np.argmax(forward(params, x), axis=1)


def accuracy(params, x, y) -> float:
    return float(np.mean(predict(params, x) == np.asarray(y)))


def copy_params(params):
    return [(w.copy(), b.copy()) for w, b in params]


def save_params(path, params) -> None:
    """Serialize parameters to a flat deterministic binary file.

    Layout: magic b"LGDP", u32 big-endian header length, a UTF-8 JSON header
    {"layer_dims": [...], "dtype": "<f8"}, then for each layer the W matrix
    (C-order) followed by the bias vector, all little-endian float64.
    """
    header = json.dumps(
        {"layer_dims": layer_dims_of(params), "dtype": "<f8"},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(PARAMS_MAGIC)
        fh.write(struct.pack(">I", len(header)))
        fh.write(header)
        for w, b in params:
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_params(path):
    buf = Path(path).read_bytes()
    if buf[:4] != PARAMS_MAGIC:
        raise ValueError(f"{path}: not a parameter file")
    (hlen,) = struct.unpack_from(">I", buf, 4)
    header = json.loads(buf[8 : 8 + hlen].decode("utf-8"))
    dims = header["layer_dims"]
    offset = 8 + hlen
    params = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w = np.frombuffer(buf, dtype="<f8", count=fan_in * fan_out, offset=offset)
        offset += w.nbytes
        b = np.frombuffer(buf, dtype="<f8", count=fan_out, offset=offset)
        offset += b.nbytes
        params.append((w.reshape(fan_in, fan_out).astype(np.float64), b.astype(np.float64)))
    if offset != len(buf):
        raise ValueError(f"{path}: {len(buf) - offset} unexpected trailing bytes")
    return params
