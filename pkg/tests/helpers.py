"""Independent oracles shared by the test modules.

These deliberately avoid the code paths they check: the gradient oracle uses
only forward+loss, and the plain-training baseline never builds a reverse
split.
"""
import numpy as np

from lgdlearn import forward, init_params, loss, sgd_step
from lgdlearn.nn import backward
from lgdlearn.seeding import make_rng


def random_gradient_config(rng):
    """Small random network/batch for gradient checks.

    Biases get a random jitter: with zero biases a fully dead hidden layer
    parks the next preactivation exactly on the ReLU kink, where analytic
    subgradients and central differences legitimately disagree.
    """
    dims = [int(rng.integers(2, 7)) for _ in range(int(rng.integers(2, 5)))]
    params = [
        (w, b + 0.1 * rng.standard_normal(b.shape)) for w, b in init_params(dims, rng)
    ]
    x = rng.random((int(rng.integers(2, 8)), dims[0]))
    y = rng.integers(0, dims[-1], size=x.shape[0])
    return params, x, y


def numerical_gradient(params, x, targets, spec, step=1e-5):
    """Central-difference gradient of the mean loss for every parameter."""
    grads = []
    for w, b in params:
        pair = []
        for arr in (w, b):
            g = np.zeros_like(arr)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + step
                lo_plus = loss(spec, forward(params, x), targets)
                arr[idx] = orig - step
                lo_minus = loss(spec, forward(params, x), targets)
                arr[idx] = orig
                g[idx] = (lo_plus - lo_minus) / (2.0 * step)
            pair.append(g)
        grads.append(tuple(pair))
    return grads


def max_relative_error(analytic, numerical, floor=1e-6):
    """Worst per-element relative error between two gradient lists."""
    worst = 0.0
    for (aw, ab), (nw, nb) in zip(analytic, numerical):
        for a, n in ((aw, nw), (ab, nb)):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def train_plain(ds, test_ds, layer_dims, epochs, loss_spec, lr=0.1, batch_size=128, seed=0):
    """Ordinary SGD training with a per-epoch oracle test accuracy readout.

    No reverse split, no checkpoint selection; returns the accuracy curve.
    """
    params = init_params(layer_dims, make_rng(seed, "init"))
    shuffle_rng = make_rng(seed, "shuffle")
    curve = []
    for _ in range(epochs):
        order = shuffle_rng.permutation(ds.n)
        for start in range(0, ds.n, batch_size):
            idx = order[start : start + batch_size]
            grads = backward(params, ds.features[idx], ds.labels[idx], loss_spec)
            params = sgd_step(params, grads, lr)
        preds = np.argmax(forward(params, test_ds.features), axis=1)
        curve.append(float(np.mean(preds == test_ds.oracle())))
    return curve


def linear_probe_accuracy(ds, epochs=8, lr=0.5, batch_size=128, seed=0):
    """Train a one-layer softmax model and report train-set oracle accuracy."""
    from lgdlearn import LossSpec

    params = init_params([ds.d, ds.k], make_rng(seed, "init"))
    shuffle_rng = make_rng(seed, "shuffle")
    spec = LossSpec("cce")
    for _ in range(epochs):
        order = shuffle_rng.permutation(ds.n)
        for start in range(0, ds.n, batch_size):
            idx = order[start : start + batch_size]
            grads = backward(params, ds.features[idx], ds.oracle()[idx], spec)
            params = sgd_step(params, grads, lr)
    preds = np.argmax(forward(params, ds.features), axis=1)
    return float(np.mean(preds == ds.oracle()))
