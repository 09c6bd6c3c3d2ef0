"""Datasets, label-noise injection, label shifting, and reverse splits.

A :class:`Dataset` is the single source of truth for training and evaluation:
a feature matrix scaled to [0, 1], the current integer labels, and (optionally)
the hidden ground-truth labels. Training code only ever touches ``features``
and ``labels``; ground truth is reachable solely through the :meth:`Dataset.oracle`
accessor so that "unsupervised" is auditable: stripping the oracle must never
change what training computes.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, IdxFormatError, OracleUnavailableError
from .idx import read_idx_images, read_idx_labels
from .seeding import make_rng


def label_shift(y, k: int):
    """Cyclic relabeling y -> (y + 1) mod k.

    Accepts a scalar or an array; raises ValueError when any label falls
    outside [0, k).
    """
    if k < 2:
        raise ValueError(f"class count must be >= 2, got {k}")
    arr = np.asarray(y)
    if arr.size and (arr.min() < 0 or arr.max() >= k):
        raise ValueError(f"label out of range [0, {k})")
    shifted = (arr + 1) % k
    return int(shifted) if arr.ndim == 0 else shifted


def _frozen_array(values, dtype):
    arr = np.asarray(values, dtype=dtype)
    if arr is values and arr.flags.writeable:
        arr = arr.copy()
    arr.flags.writeable = False
    return arr


class Dataset:
    """Immutable feature/label container with an evaluation-only truth channel.

    Parameters
    ----------
    features : (n, d) array, every value in [0, 1]
    labels : (n,) integer array, values in [0, k)
    oracle_labels : optional (n,) integer array of hidden true labels
    k : class count; inferred as ``max(labels) + 1`` (at least 2) when omitted
    """

    __slots__ = ("features", "labels", "k", "_oracle_labels")

    def __init__(self, features, labels, oracle_labels=None, k=None):
        features = _frozen_array(features, np.float64)
        labels = _frozen_array(labels, np.int64)
        if features.ndim != 2:
            raise ValueError(f"features must be 2-d, got shape {features.shape}")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise ValueError("labels must be 1-d with one entry per feature row")
        if labels.shape[0] == 0:
            raise ValueError("dataset must contain at least one sample")
        if features.min() < 0.0 or features.max() > 1.0:
            raise ValueError("features must be scaled to [0, 1]")
        if k is None:
            k = max(int(labels.max()) + 1, 2)
        k = int(k)
        if k < 2:
            raise ValueError(f"class count must be >= 2, got {k}")
        if labels.min() < 0 or labels.max() >= k:
            raise ValueError(f"labels out of range [0, {k})")
        if oracle_labels is not None:
            oracle_labels = _frozen_array(oracle_labels, np.int64)
            if oracle_labels.shape != labels.shape:
                raise ValueError("oracle_labels must match labels in length")
            if oracle_labels.min() < 0 or oracle_labels.max() >= k:
                raise ValueError(f"oracle labels out of range [0, {k})")
        self.features = features
        self.labels = labels
        self.k = k
        self._oracle_labels = oracle_labels

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def has_oracle(self) -> bool:
        return self._oracle_labels is not None

    def oracle(self) -> np.ndarray:
        """Hidden true labels. Evaluation/diagnostics only; never used in training."""
        if self._oracle_labels is None:
            raise OracleUnavailableError("dataset carries no oracle labels")
        return self._oracle_labels

    def oracle_agreement(self) -> float:
        """Fraction of current labels that equal the hidden true labels."""
        return float(np.mean(self.labels == self.oracle()))

    def without_oracle(self) -> "Dataset":
        """Copy of this dataset with the truth channel removed."""
        return Dataset(self.features, self.labels, oracle_labels=None, k=self.k)

    def with_labels(self, labels) -> "Dataset":
        """Copy of this dataset with replaced current labels (oracle kept)."""
        return Dataset(self.features, labels, oracle_labels=self._oracle_labels, k=self.k)

    def __repr__(self) -> str:
        oracle = "with oracle" if self.has_oracle else "no oracle"
        return f"Dataset(n={self.n}, d={self.d}, k={self.k}, {oracle})"


SYMMETRIC = "symmetric"
ASYMMETRIC = "asymmetric"


def default_flip_map(k: int) -> np.ndarray:
    """Default asymmetric pollution map y -> (y + 2) mod k.

    The +2 offset keeps the pollution rule distinct from the +1 shift rule, so
    the artificial reverse pattern never coincides with the noise pattern. For
    k == 2 the only derangement is the swap, which unavoidably equals the shift
    map; a warning is emitted in that case.
    """
    if k < 2:
        raise ValueError(f"class count must be >= 2, got {k}")
    offset = 2 if k >= 3 else 1
    return (np.arange(k) + offset) % k


def validate_flip_map(flip_map: np.ndarray, k: int) -> np.ndarray:
    """Check that a flip map is a fixed-point-free permutation of [0, k).

    Warns when the map collides with the +1 shift rule in either direction:
    f(y) == y+1 merges the shifted clean pattern into the pollution pattern,
    and f(y) == y-1 lets shifted polluted samples land on their true labels.
    Both break the exact pattern accounting.
    """
    flip_map = np.asarray(flip_map, dtype=np.int64)
    if flip_map.shape != (k,):
        raise ValueError(f"flip map must have length {k}, got shape {flip_map.shape}")
    if not np.array_equal(np.sort(flip_map), np.arange(k)):
        raise ValueError("flip map must be a permutation of [0, k)")
    classes = np.arange(k)
    if np.any(flip_map == classes):
        raise ValueError("flip map must have no fixed point")
    if np.any(flip_map == (classes + 1) % k):
        warnings.warn(
            "flip map sends some class y to (y+1) mod k: the pollution pattern "
            "collides with the label-shift rule and the pattern census is not exact",
            stacklevel=2,
        )
    elif np.any(flip_map == (classes - 1) % k):
        warnings.warn(
            "flip map sends some class y to (y-1) mod k: shifted polluted samples "
            "recover true labels and the pattern census is not exact",
            stacklevel=2,
        )
    return flip_map


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Label pollution source: 'symmetric' or 'asymmetric', with ratio eta.

    ``flip_map`` applies to the asymmetric source only; when None the default
    map from :func:`default_flip_map` is used at injection time.
    """

    source: str
    eta: float
    flip_map: np.ndarray | None = None

    def __post_init__(self):
        if self.source not in (SYMMETRIC, ASYMMETRIC):
            raise ValueError(f"noise source must be '{SYMMETRIC}' or '{ASYMMETRIC}', got {self.source!r}")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie strictly inside (0, 1), got {self.eta}")
        if self.flip_map is not None and self.source != ASYMMETRIC:
            raise ValueError("flip_map only applies to the asymmetric source")

    def resolved_flip_map(self, k: int) -> np.ndarray:
        if self.flip_map is None:
            fmap = default_flip_map(k)
        else:
            fmap = self.flip_map
        return validate_flip_map(fmap, k)


def inject_noise(ds: Dataset, spec: NoiseSpec, seed) -> Dataset:
    """Corrupt labels independently with probability eta; oracle is preserved.

    The input must be clean (labels equal to the oracle). Each sample draws
    u ~ U(0,1); when u <= eta the label is replaced: uniformly over the k-1
    other classes for the symmetric source, by ``flip_map[y]`` for the
    asymmetric one.
    """
    if not ds.has_oracle:
        raise ValueError("noise injection requires a dataset with oracle labels")
    if not np.array_equal(ds.labels, ds.oracle()):
        raise ValueError("noise injection requires a clean dataset (labels == oracle)")
    rng = make_rng(seed)
    flips = rng.random(ds.n) <= spec.eta
    noisy = ds.labels.copy()
    n_flips = int(flips.sum())
    if n_flips:
        truth = ds.oracle()[flips]
        if spec.source == SYMMETRIC:
            offsets = rng.integers(1, ds.k, size=n_flips)
            noisy[flips] = (truth + offsets) % ds.k
        else:
            fmap = spec.resolved_flip_map(ds.k)
            noisy[flips] = fmap[truth]
    return ds.with_labels(noisy)


@dataclass(frozen=True, eq=False)
class ReverseSplit:
    """A dataset partitioned into a label-shifted reverse subset and a leftover.

    ``dataset`` is the view S' whose labels at ``reverse_idx`` have been
    shifted by +1 mod k; leftover labels are untouched.
    """

    dataset: Dataset
    reverse_idx: np.ndarray
    leftover_idx: np.ndarray
    beta: float

    def __post_init__(self):
        if len(self.reverse_idx) + len(self.leftover_idx) != self.dataset.n:
            raise ValueError("reverse and leftover index sets must partition the dataset")

    @property
    def reverse_count(self) -> int:
        return len(self.reverse_idx)


def make_reverse_split(ds: Dataset, beta: float, seed) -> ReverseSplit:
    """Select round(beta*n) indices uniformly without replacement and shift them.

    Deterministic under a fixed seed. The reverse subset must contain at least
    k samples and must not swallow the whole dataset.
    """
    if not 0.0 < beta < 1.0:
        raise ConfigurationError(f"beta must lie strictly inside (0, 1), got {beta}")
    m = int(round(beta * ds.n))
    if m < ds.k:
        raise ConfigurationError(
            f"reverse subset of size {m} is smaller than the class count {ds.k}; "
            "increase beta or the dataset size"
        )
    if m >= ds.n:
        raise ConfigurationError("reverse subset would leave no leftover samples")
    rng = make_rng(seed)
    reverse_idx = np.sort(rng.choice(ds.n, size=m, replace=False))
    mask = np.zeros(ds.n, dtype=bool)
    mask[reverse_idx] = True
    leftover_idx = np.flatnonzero(~mask)
    shifted = ds.labels.copy()
    shifted[reverse_idx] = label_shift(shifted[reverse_idx], ds.k)
    return ReverseSplit(
        dataset=ds.with_labels(shifted),
        reverse_idx=reverse_idx,
        leftover_idx=leftover_idx,
        beta=beta,
    )


@dataclass(frozen=True)
class SynthSpec:
    """Synthetic Gaussian-cluster dataset: k clusters whose centers are pairwise
    ``separation`` cluster standard deviations apart."""

    k: int
    per_class: int
    d: int
    separation: float
    seed: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"class count must be >= 2, got {self.k}")
        if self.per_class < 1:
            raise ValueError(f"per_class must be >= 1, got {self.per_class}")
        if self.separation <= 0:
            raise ValueError(f"separation must be positive, got {self.separation}")
        if self.d < self.k:
            raise ValueError(
                f"need d >= k to place {self.k} equidistant cluster centers, got d={self.d}"
            )


def synth_gaussian(spec: SynthSpec) -> Dataset:
    """Generate the requested clusters, min-max rescaled into [0, 1].

    Cluster i sits at (separation / sqrt 2) * e_i, so all pairwise center
    distances equal ``separation`` exactly (in units of the unit cluster
    standard deviation). The rescale is one global affine map, which preserves
    the separation-to-spread ratio. Labels equal the cluster index and the
    oracle equals the labels.
    """
    rng = make_rng(spec.seed)
    labels = np.repeat(np.arange(spec.k), spec.per_class)
    centers = np.zeros((spec.k, spec.d))
    centers[np.arange(spec.k), np.arange(spec.k)] = spec.separation / np.sqrt(2.0)
    features = centers[labels] + rng.standard_normal((labels.size, spec.d))
    lo, hi = features.min(), features.max()
    features = (features - lo) / (hi - lo)
    return Dataset(features, labels, oracle_labels=labels, k=spec.k)


def load_idx(image_path, label_path, k: int | None = None) -> Dataset:
    """Load an IDX image/label pair as a Dataset.

    Pixels are flattened row-major and scaled to [0, 1]; the file labels become
    both the current labels and the oracle. The two files must agree on the
    sample count.
    """
    images = read_idx_images(image_path)
    labels = read_idx_labels(label_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            f"{image_path} has {images.shape[0]} images but {label_path} has "
            f"{labels.shape[0]} labels",
            offset=4,
        )
    n = images.shape[0]
    features = images.reshape(n, -1).astype(np.float64) / 255.0
    labels = labels.astype(np.int64)
    return Dataset(features, labels, oracle_labels=labels, k=k)
