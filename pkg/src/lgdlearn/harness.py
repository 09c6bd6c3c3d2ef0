"""Experiment orchestration: the scale-priority experiment, repeated
noise-learning runs, and CSV/JSON result emission.

Every experiment is reproducible bit-for-bit from its config plus one master
seed; the master seed splits deterministically into per-repeat noise and run
seeds (and the run seed further into split/init/shuffle streams inside the
training loop). The harness reads oracle labels only to report accuracies;
with ``strict=True`` the oracle channel is stripped before training and no
oracle-derived numbers appear anywhere, while the trained checkpoints stay
byte-identical.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, NoiseSpec, SynthSpec, inject_noise, label_shift, load_idx, synth_gaussian
from .errors import ConfigurationError, InfeasibleConfigError
from .idx import read_idx_labels
from .lgd import (
    LGDConfig,
    LoRTrace,
    RelabelConfig,
    lgd_relabel_train,
    lgd_train,
    write_trace_csv,
)
from .nn import LossSpec, TrainHyper, accuracy, backward, forward, init_params, sgd_step
from .seeding import child_int, child_seed, make_rng
from .theory import BoundsQuery, check_config


@dataclass(frozen=True)
class ScaleExpSpec:
    """Mixed-pattern training experiment that exposes scale priority.

    Three mutually exclusive patterns share one trainset: large-scale regular
    samples (clean labels), small-scale regular samples (labels produced by
    the +1 shift rule, so they can never agree with the clean rule), and a
    chaos pattern (uniformly random labels). Counts must satisfy
    n_chaos = 2 * n_lsrs and n_lsrs = 2 * n_ssrs.
    """

    n_ssrs: int = 1000
    n_lsrs: int = 2000
    n_chaos: int = 4000
    epochs: int = 15
    k: int = 10
    dim: int = 16
    separation: float = 8.0
    loss: LossSpec = field(default_factory=lambda: LossSpec("cce"))
    hyper: TrainHyper = field(default_factory=TrainHyper)
    hidden_dims: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if min(self.n_ssrs, self.n_lsrs, self.n_chaos) < 1:
            raise ConfigurationError("pattern counts must be positive")
        if self.n_lsrs != 2 * self.n_ssrs or self.n_chaos != 2 * self.n_lsrs:
            raise ConfigurationError(
                "pattern counts must satisfy n_lsrs = 2*n_ssrs and n_chaos = 2*n_lsrs, "
                f"got ({self.n_ssrs}, {self.n_lsrs}, {self.n_chaos})"
            )
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")


@dataclass(frozen=True)
class ScaleExpResult:
    """Per-epoch training accuracy per pattern plus the first-epoch alignment
    between each pattern's summed gradient and the total gradient."""

    acc_lsrs: tuple
    acc_ssrs: tuple
    acc_chaos: tuple
    grad_cosine: dict

    def to_dict(self) -> dict:
        return {
            "acc_lsrs": list(self.acc_lsrs),
            "acc_ssrs": list(self.acc_ssrs),
            "acc_chaos": list(self.acc_chaos),
            "grad_cosine": dict(self.grad_cosine),
        }


def _flat_grads(grads) -> np.ndarray:
    return np.concatenate([g.ravel() for pair in grads for g in pair])


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def run_scale_experiment(spec: ScaleExpSpec) -> ScaleExpResult:
    """Train on the three-pattern mixture and record who gets learned when.

    Gradient alignment is measured at the initial parameters: for each pattern
    the cosine between the summed per-sample gradient of that pattern and the
    summed gradient of the whole trainset.
    """
    total = spec.n_ssrs + spec.n_lsrs + spec.n_chaos
    per_class = -(-total // spec.k)
    base = synth_gaussian(
        SynthSpec(k=spec.k, per_class=per_class, d=spec.dim,
                  separation=spec.separation, seed=child_int(spec.seed, "data"))
    )
    order = make_rng(spec.seed, "assign").permutation(base.n)[:total]
    features = base.features[order]
    truth = base.oracle()[order]
    pos = {
        "lsrs": np.arange(0, spec.n_lsrs),
        "ssrs": np.arange(spec.n_lsrs, spec.n_lsrs + spec.n_ssrs),
        "chaos": np.arange(spec.n_lsrs + spec.n_ssrs, total),
    }
    labels = truth.copy()
    labels[pos["ssrs"]] = label_shift(labels[pos["ssrs"]], spec.k)
    labels[pos["chaos"]] = make_rng(spec.seed, "chaos").integers(0, spec.k, size=spec.n_chaos)

    hidden = spec.hidden_dims
    if hidden is None:
        hidden = (100, 100) if spec.dim == 784 else (64, 64)
    params = init_params([spec.dim, *hidden, spec.k], child_seed(spec.seed, "init"))

    sums = {}
    for name, rows in pos.items():
        grads = backward(params, features[rows], labels[rows], spec.loss)
        sums[name] = _flat_grads(grads) * len(rows)
    total_grad = sums["lsrs"] + sums["ssrs"] + sums["chaos"]
    grad_cosine = {name: _cosine(total_grad, g) for name, g in sums.items()}

    shuffle_rng = make_rng(spec.seed, "shuffle")
    curves = {name: [] for name in pos}
    for _ in range(spec.epochs):
        order_ep = shuffle_rng.permutation(total)
        for start in range(0, total, spec.hyper.batch_size):
            batch = order_ep[start : start + spec.hyper.batch_size]
            grads = backward(params, features[batch], labels[batch], spec.loss)
            params = sgd_step(params, grads, spec.hyper.learning_rate)
        preds = np.argmax(forward(params, features), axis=1)
        for name, rows in pos.items():
            curves[name].append(float(np.mean(preds[rows] == labels[rows])))

    return ScaleExpResult(
        acc_lsrs=tuple(curves["lsrs"]),
        acc_ssrs=tuple(curves["ssrs"]),
        acc_chaos=tuple(curves["chaos"]),
        grad_cosine=grad_cosine,
    )


@dataclass(frozen=True)
class SynthSource:
    """Synthetic data source: a train spec plus the test-set size per class."""

    spec: SynthSpec
    test_per_class: int = 500


@dataclass(frozen=True)
class IdxSource:
    """IDX-file data source. ``oracle_labels`` optionally points at the clean
    label file when ``labels`` is already polluted."""

    images: str
    labels: str
    test_images: str | None = None
    test_labels: str | None = None
    oracle_labels: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    """A full noise-learning experiment: data source, optional pollution,
    training config (plain or relabeling), repeat count, and master seed."""

    source: object
    train: object
    noise: NoiseSpec | None = None
    repeats: int = 5
    seed: int = 0
    strict: bool = False
    out_dir: str | None = None

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigurationError(f"repeats must be >= 1, got {self.repeats}")
        if not isinstance(self.train, (LGDConfig, RelabelConfig)):
            raise ConfigurationError("train must be an LGDConfig or RelabelConfig")

    @property
    def inner(self) -> LGDConfig:
        return self.train.inner if isinstance(self.train, RelabelConfig) else self.train


@dataclass(frozen=True)
class RunSummary:
    """Per-repeat checkpoint test accuracies (None under strict mode), their
    mean and standard deviation, plus all traces and checkpoints."""

    accuracies: tuple
    mean: float | None
    std: float | None
    peak_epochs: tuple
    peak_lors: tuple
    traces: tuple
    checkpoints: tuple
    config_echo: dict

    def __post_init__(self):
        values = [a for a in self.accuracies if a is not None]
        if values and not (min(values) <= self.mean <= max(values)):
            raise ValueError("summary mean must lie within the repeat range")

    def to_dict(self) -> dict:
        return {
            "config": self.config_echo,
            "accuracies": list(self.accuracies),
            "mean": self.mean,
            "std": self.std,
            "peak_epochs": list(self.peak_epochs),
            "peak_lors": list(self.peak_lors),
        }


def _load_source(source):
    if isinstance(source, SynthSource):
        train = synth_gaussian(source.spec)
        test_spec = dataclasses.replace(
            source.spec,
            per_class=source.test_per_class,
            seed=child_int(source.spec.seed, "test"),
        )
        return train, synth_gaussian(test_spec)
    if isinstance(source, IdxSource):
        train = load_idx(source.images, source.labels)
        if source.oracle_labels is not None:
            oracle = read_idx_labels(source.oracle_labels).astype(np.int64)
            k = max(int(oracle.max()) + 1, train.k)
            train = Dataset(train.features, train.labels, oracle_labels=oracle, k=k)
        test = None
        if source.test_images is not None and source.test_labels is not None:
            test = load_idx(source.test_images, source.test_labels, k=train.k)
        return train, test
    raise ConfigurationError(f"unknown data source {type(source).__name__}")


def _config_echo(cfg: ExperimentConfig) -> dict:
    def plain(obj):
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (np.integer, np.floating)):
            return obj.item()
        if isinstance(obj, tuple):
            return list(obj)
        return obj

    return {
        "source": {"type": type(cfg.source).__name__, **plain(cfg.source)},
        "noise": plain(cfg.noise),
        "train": {"type": type(cfg.train).__name__, **plain(cfg.train)},
        "repeats": cfg.repeats,
        "seed": cfg.seed,
        "strict": cfg.strict,
    }


def run_noise_experiment(cfg: ExperimentConfig) -> RunSummary:
    """Repeat (inject noise, split, train, select checkpoint) and aggregate.

    Each repeat draws a fresh noise seed and a fresh run seed from the master
    seed. Refuses to run, naming the violated inequality, when the declared
    pollution violates the feasibility bounds for the configured beta/delta.

    When the loaded training labels already disagree with their oracle (a
    pre-polluted label file), ``cfg.noise`` acts as a declaration for the
    feasibility gate and no further noise is injected; the file's pollution is
    then fixed across repeats while splits and initializations stay fresh.
    """
    base_train, base_test = _load_source(cfg.source)
    inner = cfg.inner
    if cfg.noise is not None:
        report = check_config(
            BoundsQuery(k=base_train.k, eta=cfg.noise.eta, beta=inner.beta, delta=inner.delta),
            cfg.noise.source,
        )
        if not report.feasible:
            raise InfeasibleConfigError(report.violated_conditions)
    already_polluted = base_train.has_oracle and not np.array_equal(
        base_train.labels, base_train.oracle()
    )

    accuracies, peak_epochs, peak_lors, all_traces, checkpoints = [], [], [], [], []
    for rep in range(cfg.repeats):
        ds = base_train
        if cfg.noise is not None and not already_polluted:
            ds = inject_noise(ds, cfg.noise, child_seed(cfg.seed, "noise", rep))
        oracle_on = (not cfg.strict) and base_test is not None and base_test.has_oracle
        if cfg.strict:
            ds = ds.without_oracle()
        run_seed = child_seed(cfg.seed, "run", rep)
        inner_run = dataclasses.replace(inner, record_oracle=oracle_on)
        test_arg = base_test if oracle_on else None
        if isinstance(cfg.train, RelabelConfig):
            run_cfg = dataclasses.replace(cfg.train, inner=inner_run)
            ckpt, traces = lgd_relabel_train(ds, run_cfg, run_seed, test_ds=test_arg)
        else:
            ckpt, trace = lgd_train(ds, inner_run, run_seed, test_ds=test_arg)
            traces = [trace]
        acc = None
        if oracle_on:
            acc = accuracy(ckpt.params, base_test.features, base_test.oracle())
        accuracies.append(acc)
        peak_epochs.append(ckpt.epoch)
        peak_lors.append(ckpt.lor)
        all_traces.append(tuple(traces))
        checkpoints.append(ckpt)

    values = [a for a in accuracies if a is not None]
    mean = float(np.mean(values)) if values else None
    std = float(np.std(values)) if values else None
    return RunSummary(
        accuracies=tuple(accuracies),
        mean=mean,
        std=std,
        peak_epochs=tuple(peak_epochs),
        peak_lors=tuple(peak_lors),
        traces=tuple(all_traces),
        checkpoints=tuple(checkpoints),
        config_echo=_config_echo(cfg),
    )


def _trace_records_json(trace: LoRTrace) -> list:
    return [dataclasses.asdict(rec) for rec in trace.records]


def emit_results(summary: RunSummary, out_dir, fmt: str = "csv") -> list:
    """Write one trace file per (repeat, iteration), one checkpoint per repeat,
    and a JSON summary. Returns the written paths."""
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"format must be 'csv' or 'json', got {fmt!r}")
    from .nn import save_params

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for rep, traces in enumerate(summary.traces):
        for it, trace in enumerate(traces, start=1):
            if fmt == "csv":
                path = out / f"trace_rep{rep:02d}_iter{it:02d}.csv"
                write_trace_csv(trace, path)
            else:
                path = out / f"trace_rep{rep:02d}_iter{it:02d}.json"
                path.write_text(json.dumps(_trace_records_json(trace), indent=2) + "\n")
            written.append(path)
    for rep, ckpt in enumerate(summary.checkpoints):
        path = out / f"checkpoint_rep{rep:02d}.params"
        save_params(path, ckpt.params)
        written.append(path)
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n")
    written.append(summary_path)
    return written
