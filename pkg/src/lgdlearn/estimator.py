"""Scikit-learn estimator wrapper around the limited-gradient-descent core."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset
from .lgd import LGDConfig, NoiseDeclaration, RelabelConfig, lgd_relabel_train
from .nn import LossSpec, MixupSpec, TrainHyper, forward
from .seeding import make_rng


class LGDClassifier(ClassifierMixin, BaseEstimator):
    """Neural-network classifier for noisy labels with unsupervised stopping.

    Fitting shifts the labels of a random ``beta`` fraction of the training
    data by +1 mod k (the reverse pattern), trains a small fully connected
    network by SGD, and keeps the parameter snapshot from the epoch where the
    ratio of leftover accuracy to reverse accuracy peaked. With
    ``relabel_iters > 1`` the procedure repeats from scratch, rewriting the
    training labels with each round's selected model.

    Features are min-max scaled per column into [0, 1] at fit time and the
    same transform (clipped) is applied at predict time.

    Parameters
    ----------
    beta : fraction of training samples converted into reverse samples.
    epochs : SGD epochs per (inner) run.
    relabel_iters : outer relabeling iterations; 1 disables relabeling.
    hidden_dims : hidden layer widths; None selects (100, 100) for
        784-dimensional input and (64, 64) otherwise.
    loss : 'cce', 'mae', or 'lq'.
    q : exponent for the 'lq' loss, in (0, 1].
    mixup : enable mixup augmentation on the training stream.
    mixup_alpha : Beta(alpha, alpha) shape for mixup interpolation draws.
    learning_rate, batch_size, dropout_rate : SGD hyperparameters.
    noise_source : optional 'symmetric' or 'asymmetric'; together with
        ``eta`` it switches on the feasibility gate, and fit refuses to run
        when (k, eta, beta, delta) violate the corresponding bounds.
    eta : declared pollution ratio for the feasibility gate.
    delta : dominance factor used by the tightened beta bound.
    random_state : seed for the reverse split, init, and shuffling.

    Attributes
    ----------
    classes_ : sorted unique labels seen in fit.
    params_ : trained parameter snapshot (list of (W, b) pairs).
    peak_epoch_, peak_lor_ : position and value of the selected LoR peak.
    traces_ : list of per-iteration LoR traces.
    """

    def __init__(
        self,
        beta=0.1,
        epochs=60,
        relabel_iters=1,
        hidden_dims=None,
        loss="cce",
        q=0.7,
        mixup=False,
        mixup_alpha=8.0,
        learning_rate=0.1,
        batch_size=128,
        dropout_rate=0.0,
        noise_source=None,
        eta=None,
        delta=9.0,
        random_state=None,
    ):
        self.beta = beta
        self.epochs = epochs
        self.relabel_iters = relabel_iters
        self.hidden_dims = hidden_dims
        self.loss = loss
        self.q = q
        self.mixup = mixup
        self.mixup_alpha = mixup_alpha
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.dropout_rate = dropout_rate
        self.noise_source = noise_source
        self.eta = eta
        self.delta = delta
        self.random_state = random_state

    def _build_config(self) -> RelabelConfig:
        declared = None
        if self.noise_source is not None and self.eta is not None:
            declared = NoiseDeclaration(source=self.noise_source, eta=self.eta)
        inner = LGDConfig(
            epochs=self.epochs,
            beta=self.beta,
            loss=LossSpec(self.loss, q=self.q),
            mixup=MixupSpec(enabled=self.mixup, alpha=self.mixup_alpha),
            hyper=TrainHyper(
                learning_rate=self.learning_rate,
                batch_size=self.batch_size,
                dropout_rate=self.dropout_rate,
            ),
            hidden_dims=None if self.hidden_dims is None else tuple(self.hidden_dims),
            declared_noise=declared,
            delta=self.delta,
        )
        return RelabelConfig(outer_iters=self.relabel_iters, inner=inner)

    def _transform(self, X: np.ndarray) -> np.ndarray:
        scaled = (X - self.feature_min_) / self.feature_range_
        return np.clip(scaled, 0.0, 1.0)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if self.classes_.shape[0] < 2:
            raise ValueError("LGDClassifier needs at least 2 classes")
        self.n_features_in_ = X.shape[1]
        self.feature_min_ = X.min(axis=0)
        span = X.max(axis=0) - self.feature_min_
        self.feature_range_ = np.where(span > 0, span, 1.0)

        ds = Dataset(self._transform(X), encoded, oracle_labels=None, k=self.classes_.shape[0])
        seed = self.random_state if self.random_state is not None else make_rng(None).integers(2**63)
        ckpt, traces = lgd_relabel_train(ds, self._build_config(), seed)
        self.params_ = ckpt.params
        self.peak_epoch_ = ckpt.epoch
        self.peak_lor_ = ckpt.lor
        self.traces_ = traces
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return forward(self.params_, self._transform(X))

    def predict(self, X):
        probs = self.predict_proba(X)
        return self.classes_[np.argmax(probs, axis=1)]
