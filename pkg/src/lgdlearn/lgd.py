"""Limited gradient descent: reverse-split training with LoR-peak stopping.

A beta-fraction of the trainset has its labels shifted by +1 mod k (the
reverse subset S_r); the rest is the leftover S_l. The network trains by SGD
on the union, and after every epoch the leftover-over-reverse ratio
LoR = Acc_l / Acc_r is evaluated. Because the main pattern is learned before
other regular patterns, LoR peaks near the best generalization of the main
pattern; the parameter snapshot at the running LoR maximum is the selected
checkpoint. The relabeling loop repeats this from a fresh split and fresh
initialization, rewriting the trainset labels with each round's selected model.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, make_reverse_split
from .errors import ConfigurationError, DegenerateRunError, InfeasibleConfigError
from .nn import (
    LossSpec,
    MixupSpec,
    TrainHyper,
    accuracy,
    backward,
    copy_params,
    forward,
    init_params,
    loss,
    mixup_batch,
    predict,
    sgd_step,
)
from .seeding import child_seed, make_rng
from .theory import BoundsQuery, check_config

TRACE_CSV_HEADER = ["epoch", "acc_l", "acc_r", "lor", "train_loss", "oracle_test_acc"]


@dataclass(frozen=True)
class LGDConfig:
    """One training run: epoch budget, reverse-selection rate, loss, mixup,
    SGD hyperparameters, and optional architecture / noise declaration.

    ``hidden_dims=None`` selects (100, 100) for 784-dimensional input and
    (64, 64) otherwise. When ``declared_noise`` names the pollution source,
    the run refuses to start unless (k, eta, beta, delta) pass the
    feasibility bounds.
    """

    epochs: int
    beta: float = 0.1
    loss: LossSpec = field(default_factory=lambda: LossSpec("cce"))
    mixup: MixupSpec = field(default_factory=MixupSpec)
    hyper: TrainHyper = field(default_factory=TrainHyper)
    hidden_dims: tuple | None = None
    declared_noise: "NoiseDeclaration | None" = None
    delta: float = 9.0
    record_oracle: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 < self.beta < 1.0:
            raise ConfigurationError(f"beta must lie strictly inside (0, 1), got {self.beta}")
        if self.delta < 1.0:
            raise ConfigurationError(f"delta must be >= 1, got {self.delta}")

    def resolved_hidden_dims(self, d: int) -> tuple:
        if self.hidden_dims is not None:
            return tuple(self.hidden_dims)
        return (100, 100) if d == 784 else (64, 64)


@dataclass(frozen=True)
class NoiseDeclaration:
    """What the caller believes about the pollution of the trainset; used only
    for the feasibility gate, never by training itself."""

    source: str
    eta: float


@dataclass(frozen=True)
class RelabelConfig:
    """Outer relabeling iterations around an inner LGD run."""

    outer_iters: int
    inner: LGDConfig

    def __post_init__(self):
        if self.outer_iters < 1:
            raise ConfigurationError(f"outer_iters must be >= 1, got {self.outer_iters}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    acc_l: float
    acc_r: float
    lor: float
    train_loss: float
    oracle_test_acc: float | None = None


@dataclass(frozen=True)
class LoRTrace:
    """Per-epoch record list plus the earliest epoch attaining the LoR maximum."""

    records: tuple
    peak_epoch: int
    peak_lor: float

    @classmethod
    def from_records(cls, records) -> "LoRTrace":
        records = tuple(records)
        if not records:
            raise ValueError("a trace needs at least one record")
        peak = max(rec.lor for rec in records)
        peak_epoch = next(rec.epoch for rec in records if rec.lor == peak)
        return cls(records=records, peak_epoch=peak_epoch, peak_lor=peak)


@dataclass(frozen=True)
class Checkpoint:
    """Parameter snapshot captured at the running LoR maximum."""

    params: list
    epoch: int
    lor: float


def compute_lor(acc_l: float, acc_r: float, reverse_count: int) -> float:
    """Leftover-over-reverse ratio with a scale-aware division guard.

    The denominator is floored at half of one correct reverse sample,
    1 / (2 * reverse_count), so the ratio stays finite and monotone in acc_l.
    """
    if reverse_count < 1:
        raise ValueError(f"reverse_count must be >= 1, got {reverse_count}")
    if not (0.0 <= acc_l <= 1.0 and 0.0 <= acc_r <= 1.0):
        raise ValueError("accuracies must lie in [0, 1]")
    eps = 1.0 / (2.0 * reverse_count)
    return acc_l / max(acc_r, eps)


def _check_feasibility(cfg: LGDConfig, k: int) -> None:
    if cfg.declared_noise is None:
        return
    report = check_config(
        BoundsQuery(k=k, eta=cfg.declared_noise.eta, beta=cfg.beta, delta=cfg.delta),
        cfg.declared_noise.source,
    )
    if not report.feasible:
        raise InfeasibleConfigError(report.violated_conditions)


def lgd_train(ds: Dataset, cfg: LGDConfig, seed, test_ds: Dataset | None = None):
    """Run one limited-gradient-descent training and return (Checkpoint, LoRTrace).

    Builds the reverse split, trains one epoch at a time over the shuffled
    union, and after each epoch evaluates the leftover samples against their
    current labels and the reverse samples against their shifted labels.
    Parameters are snapshotted whenever LoR strictly exceeds its running
    maximum. ``oracle_test_acc`` is recorded per epoch when ``record_oracle``
    is set and a test set is supplied; this is a pure read-out and cannot
    affect the trained parameters.
    """
    _check_feasibility(cfg, ds.k)
    split = make_reverse_split(ds, cfg.beta, child_seed(seed, "split"))
    train = split.dataset
    hyper = cfg.hyper
    dims = [ds.d, *cfg.resolved_hidden_dims(ds.d), ds.k]
    params = init_params(dims, child_seed(seed, "init"))
    shuffle_rng = make_rng(seed, "shuffle")
    mixup_rng = make_rng(seed, "mixup")
    dropout_rng = make_rng(seed, "dropout")

    best: Checkpoint | None = None
    records = []
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(train.n)
        for start in range(0, train.n, hyper.batch_size):
            batch_idx = order[start : start + hyper.batch_size]
            x = train.features[batch_idx]
            y = train.labels[batch_idx]
            if cfg.mixup.enabled:
                pair = mixup_rng.permutation(len(batch_idx))
                lam = float(mixup_rng.beta(cfg.mixup.alpha, cfg.mixup.alpha))
                x, targets = mixup_batch(x, y, x[pair], y[pair], ds.k, lam=lam)
            else:
                targets = y
            grads = backward(
                params, x, targets, cfg.loss,
                dropout_rate=hyper.dropout_rate, dropout_rng=dropout_rng,
            )
            params = sgd_step(params, grads, hyper.learning_rate)

        probs = forward(params, train.features)
        preds = np.argmax(probs, axis=1)
        acc_l = float(np.mean(preds[split.leftover_idx] == train.labels[split.leftover_idx]))
        acc_r = float(np.mean(preds[split.reverse_idx] == train.labels[split.reverse_idx]))
        lor = compute_lor(acc_l, acc_r, split.reverse_count)
        train_loss = loss(cfg.loss, probs, train.labels)
        oracle_acc = None
        if cfg.record_oracle and test_ds is not None:
            oracle_acc = accuracy(params, test_ds.features, test_ds.oracle())
        records.append(
            EpochRecord(
                epoch=epoch, acc_l=acc_l, acc_r=acc_r, lor=lor,
                train_loss=train_loss, oracle_test_acc=oracle_acc,
            )
        )
        if best is None or lor > best.lor:
            best = Checkpoint(params=copy_params(params), epoch=epoch, lor=lor)

    trace = LoRTrace.from_records(records)
    if trace.peak_lor == 0.0:
        raise DegenerateRunError(
            "leftover accuracy stayed at zero for every epoch; no checkpoint selected"
        )
    return best, trace


def relabel(ds: Dataset, params) -> Dataset:
    """Replace every current label with the model's argmax prediction.

    Oracle labels are untouched; ties break toward the smallest class index.
    """
    if params[0][0].shape[0] != ds.d:
        raise ValueError(
            f"model input dim {params[0][0].shape[0]} does not match dataset dim {ds.d}"
        )
    if params[-1][0].shape[1] != ds.k:
        raise ValueError(
            f"model output dim {params[-1][0].shape[1]} does not match class count {ds.k}"
        )
    return ds.with_labels(predict(params, ds.features))


def lgd_relabel_train(ds: Dataset, cfg: RelabelConfig, seed, test_ds: Dataset | None = None):
    """Relabeling loop around LGD; returns (best Checkpoint, list of LoRTrace).

    Each outer iteration draws a fresh reverse split from the *current*
    trainset and re-initializes the parameters from scratch (never a warm
    start). The iteration's peak checkpoint is promoted to the global model
    when its LoR exceeds the running peak, and the trainset labels are
    rewritten with that iteration's checkpoint before the next round. The
    original noisy labels are discarded after the first relabel.

    Iteration 1 consumes exactly the same seed streams as ``lgd_train(ds,
    cfg.inner, seed)``, so ``outer_iters=1`` reproduces a plain run.
    """
    current = ds
    model: Checkpoint | None = None
    traces = []
    for i in range(1, cfg.outer_iters + 1):
        iter_seed = seed if i == 1 else child_seed(seed, "relabel-iter", i)
        ckpt, trace = lgd_train(current, cfg.inner, iter_seed, test_ds=test_ds)
        traces.append(trace)
        if model is None or ckpt.lor > model.lor:
            model = ckpt
        if i < cfg.outer_iters:
            current = relabel(current, ckpt.params)
    return model, traces


def write_trace_csv(trace: LoRTrace, path) -> None:
    """Write a trace using the fixed schema; the oracle column stays empty for
    records without a diagnostic read-out."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_CSV_HEADER)
        for rec in trace.records:
            oracle = "" if rec.oracle_test_acc is None else repr(rec.oracle_test_acc)
            writer.writerow(
                [rec.epoch, repr(rec.acc_l), repr(rec.acc_r), repr(rec.lor),
                 repr(rec.train_loss), oracle]
            )


def read_trace_csv(path) -> LoRTrace:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != TRACE_CSV_HEADER:
            raise ValueError(f"{path}: unexpected trace header {header}")
        records = [
            EpochRecord(
                epoch=int(row[0]), acc_l=float(row[1]), acc_r=float(row[2]),
                lor=float(row[3]), train_loss=float(row[4]),
                oracle_test_acc=float(row[5]) if row[5] else None,
            )
            for row in reader
        ]
    return LoRTrace.from_records(records)
