"""Command-line interface.

Subcommands: bounds, synth, pollute, train-lgd, train-relabel, scale-exp.
Exit codes: 0 success, 2 infeasible or invalid configuration, 3 I/O or file
format error, 4 degenerate run (no usable checkpoint).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    ASYMMETRIC,
    SYMMETRIC,
    Dataset,
    NoiseSpec,
    SynthSpec,
    inject_noise,
    synth_gaussian,
)
from .errors import ConfigurationError, DegenerateRunError, IdxFormatError
from .harness import (
    ExperimentConfig,
    IdxSource,
    ScaleExpSpec,
    SynthSource,
    emit_results,
    run_noise_experiment,
    run_scale_experiment,
)
from .idx import read_idx_images, read_idx_labels, write_idx_images, write_idx_labels
from .lgd import LGDConfig, NoiseDeclaration, RelabelConfig
from .nn import LossSpec, MixupSpec, TrainHyper
from .theory import BoundsQuery, check_config

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4

_SOURCES = {"sym": SYMMETRIC, "asym": ASYMMETRIC}


def _parse_map(text: str) -> np.ndarray:
    try:
        return np.array([int(part) for part in text.split(",")], dtype=np.int64)
    except ValueError as exc:
        raise ConfigurationError(f"--map must be a comma-separated permutation, got {text!r}") from exc


def _parse_hidden(text: str) -> tuple:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise ConfigurationError(f"--hidden must be comma-separated widths, got {text!r}") from exc


def _add_noise_flags(p: argparse.ArgumentParser, eta_required: bool = False) -> None:
    p.add_argument("--noise", choices=("sym", "asym"), default="sym", help="pollution source")
    p.add_argument(
        "--eta", type=float, required=eta_required, default=None,
        help="pollution ratio; injected into clean input, declared for pre-polluted input",
    )
    p.add_argument("--map", default=None, help="asymmetric flip map as a comma permutation of [0,k)")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beta", type=float, default=0.1, help="reverse-selection rate")
    p.add_argument("--delta", type=float, default=9.0, help="dominance factor for the beta bound")
    p.add_argument("--epochs", type=int, default=60, help="epochs per LGD run")
    p.add_argument("--loss", choices=("cce", "mae", "lq"), default="cce")
    p.add_argument("--q", type=float, default=0.7, help="exponent for the lq loss")
    p.add_argument("--mixup", action="store_true", help="enable mixup augmentation")
    p.add_argument("--mixup-alpha", type=float, default=8.0)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--hidden", default=None, help="hidden widths, e.g. 100,100 (default: by input dim)")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--strict", action="store_true", help="disable all oracle access")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="trace file format")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--images", default=None, help="IDX image file (train)")
    p.add_argument("--labels", default=None, help="IDX label file (train)")
    p.add_argument("--oracle-labels", default=None, help="IDX file with clean labels, when --labels is polluted")
    p.add_argument("--test-images", default=None)
    p.add_argument("--test-labels", default=None)
    p.add_argument("--k", type=int, default=4, help="class count (synthetic data)")
    p.add_argument("--per-class", type=int, default=2000, help="train samples per class (synthetic)")
    p.add_argument("--dim", type=int, default=16, help="feature dimension (synthetic)")
    p.add_argument("--sep", type=float, default=6.0, help="cluster separation in sigmas (synthetic)")
    p.add_argument("--test-per-class", type=int, default=500)


def _factor_dims(d: int) -> tuple:
    rows = int(np.sqrt(d))
    while rows > 1 and d % rows:
        rows -= 1
    return rows, d // rows


def _cmd_bounds(args) -> int:
    query = BoundsQuery(k=args.k, eta=args.eta, beta=args.beta, delta=args.delta)
    report = check_config(query, _SOURCES[args.noise])
    if args.format != "json":
        rows = [
            ("source", report.source),
            ("k", report.k),
            ("eta", report.eta),
            ("beta", report.beta),
            ("delta", report.delta),
            ("eta bound", report.eta_bound),
            ("beta bound (basic)", report.beta_bound_basic),
            ("beta bound (dominance)", report.beta_bound_delta),
            ("feasible", report.feasible),
        ]
        width = max(len(name) for name, _ in rows)
        for name, value in rows:
            print(f"{name:<{width}}  {value}")
        for cond in report.violated_conditions:
            print(f"violated: {cond}")
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def _quantize(features: np.ndarray) -> np.ndarray:
    return np.rint(features * 255.0).astype(np.uint8)


def _write_idx_dataset(ds: Dataset, out: Path, prefix: str) -> dict:
    rows, cols = _factor_dims(ds.d)
    images = _quantize(ds.features).reshape(ds.n, rows, cols)
    image_path = out / f"{prefix}-images.idx3-ubyte"
    label_path = out / f"{prefix}-labels.idx1-ubyte"
    write_idx_images(image_path, images)
    write_idx_labels(label_path, ds.labels)
    return {"images": str(image_path), "labels": str(label_path), "n": ds.n}


def _cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train = synth_gaussian(SynthSpec(k=args.k, per_class=args.per_class, d=args.dim,
                                     separation=args.sep, seed=args.seed))
    from .seeding import child_int

    test = synth_gaussian(SynthSpec(k=args.k, per_class=args.test_per_class, d=args.dim,
                                    separation=args.sep, seed=child_int(args.seed, "test")))
    meta = {
        "k": args.k,
        "dim": args.dim,
        "separation": args.sep,
        "seed": args.seed,
        "train": _write_idx_dataset(train, out, "train"),
        "test": _write_idx_dataset(test, out, "test"),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(json.dumps(meta, indent=2))
    return EXIT_OK


def _cmd_pollute(args) -> int:
    labels = read_idx_labels(args.labels).astype(np.int64)
    if args.images is not None:
        images = read_idx_images(args.images)
        if images.shape[0] != labels.shape[0]:
            raise IdxFormatError(
                f"{args.images} has {images.shape[0]} images but {args.labels} has "
                f"{labels.shape[0]} labels",
                offset=4,
            )
    k = args.k if args.k else max(int(labels.max()) + 1, 2)
    spec = NoiseSpec(_SOURCES[args.noise], args.eta,
                     flip_map=_parse_map(args.map) if args.map else None)
    ds = Dataset(np.zeros((labels.size, 1)), labels, oracle_labels=labels, k=k)
    noisy = inject_noise(ds, spec, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "labels-polluted.idx1-ubyte"
    write_idx_labels(path, noisy.labels)
    report = {
        "labels": str(path),
        "n": int(labels.size),
        "k": k,
        "eta": args.eta,
        "source": _SOURCES[args.noise],
        "flipped": int(np.sum(noisy.labels != labels)),
        "seed": args.seed,
    }
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _build_experiment(args, relabel: bool) -> ExperimentConfig:
    if args.images is not None or args.labels is not None:
        if args.images is None or args.labels is None:
            raise ConfigurationError("--images and --labels must be given together")
        source = IdxSource(images=args.images, labels=args.labels,
                           test_images=args.test_images, test_labels=args.test_labels,
                           oracle_labels=args.oracle_labels)
    else:
        source = SynthSource(
            spec=SynthSpec(k=args.k, per_class=args.per_class, d=args.dim,
                           separation=args.sep, seed=args.seed),
            test_per_class=args.test_per_class,
        )
    noise = None
    declared = None
    if args.eta is not None:
        noise = NoiseSpec(_SOURCES[args.noise], args.eta,
                          flip_map=_parse_map(args.map) if args.map else None)
        declared = NoiseDeclaration(source=noise.source, eta=noise.eta)
    inner = LGDConfig(
        epochs=args.epochs,
        beta=args.beta,
        loss=LossSpec(args.loss, q=args.q),
        mixup=MixupSpec(enabled=args.mixup, alpha=args.mixup_alpha),
        hyper=TrainHyper(learning_rate=args.lr, batch_size=args.batch, dropout_rate=args.dropout),
        hidden_dims=_parse_hidden(args.hidden) if args.hidden else None,
        declared_noise=declared,
        delta=args.delta,
    )
    train = RelabelConfig(outer_iters=args.relabel_iters, inner=inner) if relabel else inner
    return ExperimentConfig(source=source, train=train, noise=noise,
                            repeats=args.repeats, seed=args.seed, strict=args.strict,
                            out_dir=args.out)


def _cmd_train(args, relabel: bool) -> int:
    cfg = _build_experiment(args, relabel)
    summary = run_noise_experiment(cfg)
    emit_results(summary, args.out, fmt=args.format)
    print(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_scale_exp(args) -> int:
    spec = ScaleExpSpec(
        n_ssrs=args.ns, n_lsrs=args.nl, n_chaos=args.nc, epochs=args.epochs,
        k=args.k, dim=args.dim, separation=args.sep,
        hyper=TrainHyper(learning_rate=args.lr, batch_size=args.batch),
        hidden_dims=_parse_hidden(args.hidden) if args.hidden else None,
        seed=args.seed,
    )
    result = run_scale_experiment(spec)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "scale_curves.csv", "w") as fh:
            fh.write("epoch,acc_lsrs,acc_ssrs,acc_chaos\n")
            for i in range(len(result.acc_lsrs)):
                fh.write(f"{i + 1},{result.acc_lsrs[i]!r},{result.acc_ssrs[i]!r},{result.acc_chaos[i]!r}\n")
        (out / "grad_cosine.json").write_text(json.dumps(result.grad_cosine, indent=2) + "\n")
    print(json.dumps(result.to_dict(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lgd", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="feasibility report for (k, eta, beta, delta)")
    p.add_argument("--k", type=int, default=10)
    _add_noise_flags(p, eta_required=True)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=9.0)
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="'json' suppresses the human-readable table")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("synth", help="generate a synthetic Gaussian dataset as IDX files")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--per-class", type=int, default=2000)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--sep", type=float, default=6.0)
    p.add_argument("--test-per-class", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("pollute", help="inject label noise into an IDX label file")
    p.add_argument("--labels", required=True)
    p.add_argument("--images", default=None, help="optional image file for a count check")
    p.add_argument("--k", type=int, default=None)
    _add_noise_flags(p, eta_required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pollute)

    for name, relabel in (("train-lgd", False), ("train-relabel", True)):
        p = sub.add_parser(name, help="run repeated noise-learning experiments")
        _add_data_flags(p)
        _add_noise_flags(p)
        _add_train_flags(p)
        if relabel:
            p.add_argument("--relabel-iters", type=int, default=3)
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=lambda a, r=relabel: _cmd_train(a, r))

    p = sub.add_parser("scale-exp", help="three-pattern scale-priority experiment")
    p.add_argument("--ns", type=int, default=1000, help="small-scale regular sample count")
    p.add_argument("--nl", type=int, default=2000, help="large-scale regular sample count")
    p.add_argument("--nc", type=int, default=4000, help="chaos sample count")
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--sep", type=float, default=8.0)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--hidden", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_scale_exp)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (IdxFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DegenerateRunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as exc:
        # ConfigurationError and the domain validations all subclass ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
