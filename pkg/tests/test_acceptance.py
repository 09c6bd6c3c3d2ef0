"""Acceptance suite: one test per criterion, each reporting a pass/fail line.

Heavy training runs share module-scoped fixtures. Criterion 8 runs against
real MNIST IDX files when the LGD_MNIST_DIR environment variable points at a
directory containing train-images-idx3-ubyte / train-labels-idx1-ubyte /
t10k-images-idx3-ubyte / t10k-labels-idx1-ubyte; otherwise it uses an
MNIST-shaped 10-class, 784-dimensional synthetic stand-in routed through the
IDX files so the full loading path is exercised.
"""
import csv
import json
import os
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from lgdlearn import (
    LGDConfig,
    LossSpec,
    NoiseSpec,
    RelabelConfig,
    ScaleExpSpec,
    SynthSpec,
    TrainHyper,
    accuracy,
    backward,
    expected_true_after_shift,
    inject_noise,
    lgd_relabel_train,
    lgd_train,
    load_idx,
    pattern_census_asymmetric,
    pattern_census_symmetric,
    relabel,
    run_scale_experiment,
    simulate_census_asymmetric,
    simulate_census_symmetric,
    symmetric_beta_bound,
    symmetric_beta_bound_delta,
    synth_gaussian,
)
from lgdlearn.cli import main as cli_main
from lgdlearn.idx import write_idx_images, write_idx_labels
from lgdlearn.seeding import child_int

from conftest import record_criterion
from helpers import max_relative_error, numerical_gradient, random_gradient_config


def test_criterion_1_shift_recovery_simulation():
    """Shift 9,000 fully polluted labels (k=10); ~1/(k-1) recover the truth."""
    r, k = 9000, 10
    rng = np.random.default_rng(2024)
    truth = rng.integers(0, k, size=r)
    polluted = (truth + rng.integers(1, k, size=r)) % k
    recovered = int(np.sum((polluted + 1) % k == truth))
    expected = expected_true_after_shift(r, k)
    ok = 910 <= recovered <= 1090 and expected == 1000
    record_criterion(1, "shift-recovery simulation", ok, f"recovered={recovered}, expected=1000")
    assert ok


def test_criterion_2_bound_arithmetic():
    """Selection-rate bounds against independent rational arithmetic."""
    basic = symmetric_beta_bound(0.6, 10)
    basic_expected = float(Fraction(1, 1) * (1 - Fraction(6, 10)) / (2 - 2 * Fraction(6, 10) - Fraction(6, 10) / 9))
    ok_basic = abs(basic - basic_expected) < 1e-12 and abs(basic - 0.5454545454545454) < 1e-12

    ok_delta = all(abs(symmetric_beta_bound_delta(0.0, k, 9) - 0.1) < 1e-12 for k in (2, 4, 10, 100))

    ok_specialize = True
    for eta in np.linspace(0.02, 0.85, 12):
        for k in (2, 3, 10, 25):
            if eta >= (k - 1) / k:
                continue
            if symmetric_beta_bound_delta(float(eta), k, 1.0) != symmetric_beta_bound(float(eta), k):
                ok_specialize = False

    ok_mono = True
    for eta in np.linspace(0.0, 0.85, 20):
        values = [symmetric_beta_bound_delta(float(eta), 10, float(d)) for d in np.linspace(1, 40, 20)]
        if not all(b < a for a, b in zip(values, values[1:])):
            ok_mono = False

    ok = ok_basic and ok_delta and ok_specialize and ok_mono
    record_criterion(
        2, "bound arithmetic", ok,
        f"basic={ok_basic}, delta={ok_delta}, specialize={ok_specialize}, monotone={ok_mono}",
    )
    assert ok


def test_criterion_3_census_consistency():
    """Monte Carlo pattern counts match the analytic censuses within 3 sigma."""
    rng = np.random.default_rng(7)
    n = 100_000
    worst_z = 0.0
    sums_exact = True
    for trial in range(10):
        eta = float(rng.uniform(0.05, 0.9))
        beta = float(rng.uniform(0.05, 0.9))
        k = int(rng.integers(4, 21))
        analytic = pattern_census_symmetric(n, eta, beta, k)
        empirical = simulate_census_symmetric(n, eta, beta, k, seed=1000 + trial)
        sums_exact &= sum(empirical.after.values()) == n
        for cell, expected in analytic.after.items():
            sigma = np.sqrt(n * (expected / n) * (1 - expected / n))
            z = abs(empirical.after[cell] - expected) / max(sigma, 1e-9)
            worst_z = max(worst_z, z)

        eta_a = float(rng.uniform(0.05, 0.9))
        analytic_a = pattern_census_asymmetric(n, eta_a, beta, k=k)
        empirical_a = simulate_census_asymmetric(n, eta_a, beta, k, seed=5000 + trial)
        sums_exact &= sum(empirical_a.after.values()) == n
        for cell, expected in analytic_a.after.items():
            if expected == 0.0:
                if empirical_a.after[cell] != 0.0:
                    worst_z = np.inf
                continue
            sigma = np.sqrt(n * (expected / n) * (1 - expected / n))
            worst_z = max(worst_z, abs(empirical_a.after[cell] - expected) / max(sigma, 1e-9))

    ok = worst_z <= 3.0 and sums_exact
    record_criterion(3, "census consistency", ok, f"worst |z|={worst_z:.2f}, sums exact={sums_exact}")
    assert ok


def test_criterion_4_scale_priority():
    """Mixed-pattern run: the large regular pattern is learned first."""
    spec = ScaleExpSpec(
        n_ssrs=1000, n_lsrs=2000, n_chaos=4000, epochs=12, k=10, dim=16,
        separation=8.0, hyper=TrainHyper(learning_rate=0.1, batch_size=128), seed=0,
    )
    result = run_scale_experiment(spec)
    hit = next((i for i, v in enumerate(result.acc_lsrs) if v >= 0.85), None)
    ok_hit = hit is not None
    ok_order = ok_hit and result.acc_ssrs[hit] <= 0.60 and result.acc_chaos[hit] <= 0.25
    ok_cosine = result.grad_cosine["lsrs"] > result.grad_cosine["ssrs"]
    ok = ok_hit and ok_order and ok_cosine
    detail = (
        f"first LSRS>=0.85 at epoch {None if hit is None else hit + 1}, "
        f"ssrs={None if hit is None else round(result.acc_ssrs[hit], 3)}, "
        f"chaos={None if hit is None else round(result.acc_chaos[hit], 3)}, "
        f"cos lsrs={result.grad_cosine['lsrs']:.3f} > ssrs={result.grad_cosine['ssrs']:.3f}"
    )
    record_criterion(4, "scale priority", ok, detail)
    assert ok


def test_criterion_5_gradient_correctness():
    """Analytic gradients vs central differences, 10 random configs per loss.

    Relative error uses a 1e-6 floor in the denominator so that exact-zero
    entries are compared against finite-difference roundoff sensibly.
    """
    worst = {}
    for kind, seed in (("cce", 11), ("mae", 22), ("lq", 33)):
        rng = np.random.default_rng(seed)
        spec = LossSpec(kind, q=0.7)
        errs = []
        for _ in range(10):
            params, x, y = random_gradient_config(rng)
            errs.append(max_relative_error(backward(params, x, y, spec), numerical_gradient(params, x, y, spec)))
        worst[kind] = max(errs)
    ok = all(v < 1e-4 for v in worst.values())
    record_criterion(5, "gradient correctness", ok, ", ".join(f"{k}={v:.2e}" for k, v in worst.items()))
    assert ok


PEAK_SEEDS = (0, 1, 2, 3, 4)


@pytest.fixture(scope="module")
def peak_quality_runs():
    """Criterion 6/7 runs: 4-class Gaussian, n=8000, eta=0.4, beta=0.1, CCE,
    60 epochs, 5 seeds, d-64-64-k network."""
    rows = []
    for seed in PEAK_SEEDS:
        train = synth_gaussian(SynthSpec(k=4, per_class=2000, d=64, separation=5.5, seed=child_int(seed, "data")))
        test = synth_gaussian(SynthSpec(k=4, per_class=500, d=64, separation=5.5, seed=child_int(seed, "test")))
        noisy = inject_noise(train, NoiseSpec("symmetric", 0.4), child_int(seed, "noise"))
        cfg = LGDConfig(
            epochs=60, beta=0.1, loss=LossSpec("cce"),
            hyper=TrainHyper(learning_rate=0.2, batch_size=64), record_oracle=True,
        )
        ckpt, trace = lgd_train(noisy, cfg, child_int(seed, "run"), test_ds=test)
        curve = [rec.oracle_test_acc for rec in trace.records]
        rows.append({
            "seed": seed,
            "best": max(curve),
            "ckpt": curve[ckpt.epoch - 1],
            "final": curve[-1],
            "peak_epoch": ckpt.epoch,
        })
    return rows


def test_criterion_6_lor_peak_quality(peak_quality_runs):
    """On >= 4/5 seeds the LoR-peak checkpoint is within 3 points of the best
    epoch AND the final epoch shows the memorization decline (>= 2 points)."""
    good = [
        row["ckpt"] >= row["best"] - 0.03 and row["final"] <= row["best"] - 0.02
        for row in peak_quality_runs
    ]
    ok = sum(good) >= 4
    detail = "; ".join(
        f"seed{row['seed']}: best={row['best']:.3f} ckpt={row['ckpt']:.3f} final={row['final']:.3f}"
        for row in peak_quality_runs
    )
    record_criterion(6, "LoR-peak checkpoint quality", ok, f"{sum(good)}/5 seeds; {detail}")
    assert ok


def test_criterion_7_supervised_gap(peak_quality_runs):
    """Mean LoR-selected accuracy within 3 points of the oracle-selected one."""
    mean_ckpt = float(np.mean([row["ckpt"] for row in peak_quality_runs]))
    mean_best = float(np.mean([row["best"] for row in peak_quality_runs]))
    gap = abs(mean_ckpt - mean_best)
    ok = gap <= 0.03
    record_criterion(7, "supervised-selection gap", ok, f"|{mean_ckpt:.4f} - {mean_best:.4f}| = {gap:.4f}")
    assert ok


MNIST_FILES = (
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
)

CRIT8_LR = 0.02
CRIT8_EPOCHS = 30


def _mnist_shaped_data(tmp_path: Path):
    """Real MNIST when LGD_MNIST_DIR provides it; otherwise a 784-d 10-class
    stand-in written to and read back from IDX files."""
    mnist_dir = os.environ.get("LGD_MNIST_DIR")
    if mnist_dir and all((Path(mnist_dir) / name).exists() for name in MNIST_FILES):
        base = Path(mnist_dir)
        train = load_idx(base / MNIST_FILES[0], base / MNIST_FILES[1])
        test = load_idx(base / MNIST_FILES[2], base / MNIST_FILES[3])
        return train, test, "mnist"

    def round_trip(spec, prefix):
        ds = synth_gaussian(spec)
        images = np.rint(ds.features * 255).astype(np.uint8).reshape(ds.n, 28, 28)
        write_idx_images(tmp_path / f"{prefix}-images-idx3-ubyte", images)
        write_idx_labels(tmp_path / f"{prefix}-labels-idx1-ubyte", ds.labels)
        return load_idx(tmp_path / f"{prefix}-images-idx3-ubyte", tmp_path / f"{prefix}-labels-idx1-ubyte")

    train = round_trip(SynthSpec(k=10, per_class=2000, d=784, separation=16.0, seed=1000), "train")
    test = round_trip(SynthSpec(k=10, per_class=500, d=784, separation=16.0, seed=2000), "t10k")
    return train, test, "surrogate"


def test_criterion_8_relabeling_improvement(tmp_path):
    """eta=0.6 symmetric, M=3 relabeling, 784-100-100-10 network, 3 seeds:
    label agreement strictly rises after round 1 on every seed and the mean
    final accuracy does not fall more than 0.5 points below the M=1 run."""
    train, test, flavor = _mnist_shaped_data(tmp_path)
    inner = LGDConfig(
        epochs=CRIT8_EPOCHS, beta=0.1, loss=LossSpec("cce"),
        hyper=TrainHyper(learning_rate=CRIT8_LR, batch_size=128), record_oracle=True,
    )
    agreements_rise = []
    acc_m1, acc_m3 = [], []
    for seed in (0, 1, 2):
        noisy = inject_noise(train, NoiseSpec("symmetric", 0.6), child_int(seed, "noise"))
        run_seed = child_int(seed, "run")
        ckpt1, _ = lgd_train(noisy, inner, run_seed, test_ds=test)
        after_round1 = relabel(noisy, ckpt1.params).oracle_agreement()
        agreements_rise.append(after_round1 > noisy.oracle_agreement())
        ckpt3, _ = lgd_relabel_train(noisy, RelabelConfig(3, inner), run_seed, test_ds=test)
        acc_m1.append(accuracy(ckpt1.params, test.features, test.oracle()))
        acc_m3.append(accuracy(ckpt3.params, test.features, test.oracle()))
    mean1, mean3 = float(np.mean(acc_m1)), float(np.mean(acc_m3))
    ok = all(agreements_rise) and mean3 >= mean1 - 0.005
    record_criterion(
        8, "relabeling improvement", ok,
        f"data={flavor}; agreement rises on {sum(agreements_rise)}/3 seeds; "
        f"mean M=1 {mean1:.4f}, M=3 {mean3:.4f}",
    )
    assert ok


def _strip_oracle_column(path: Path) -> list:
    with open(path, newline="") as fh:
        return [row[:5] for row in csv.reader(fh)]


def test_criterion_9_strict_mode_byte_identity(tmp_path):
    """--strict runs produce byte-identical checkpoints and identical traces
    (minus the oracle column) for both training commands."""
    ok = True
    details = []
    for command, extra in (("train-lgd", []), ("train-relabel", ["--relabel-iters", "2"])):
        open_dir = tmp_path / f"{command}-open"
        strict_dir = tmp_path / f"{command}-strict"
        base = [
            command, "--k", "4", "--per-class", "200", "--dim", "8", "--sep", "6",
            "--test-per-class", "50", "--eta", "0.3", "--epochs", "3", "--repeats", "2",
            "--batch", "64", "--hidden", "16,16", "--seed", "11", *extra,
        ]
        assert cli_main(base + ["--out", str(open_dir)]) == 0
        assert cli_main(base + ["--strict", "--out", str(strict_dir)]) == 0

        for ckpt in sorted(open_dir.glob("checkpoint_*.params")):
            same = ckpt.read_bytes() == (strict_dir / ckpt.name).read_bytes()
            ok &= same
            details.append(f"{command}/{ckpt.name}: {'identical' if same else 'DIFFER'}")
        for trace in sorted(open_dir.glob("trace_*.csv")):
            same = _strip_oracle_column(trace) == _strip_oracle_column(strict_dir / trace.name)
            ok &= same
            if not same:
                details.append(f"{command}/{trace.name}: DIFFER")
        strict_summary = json.loads((strict_dir / "summary.json").read_text())
        ok &= all(acc is None for acc in strict_summary["accuracies"])
    record_criterion(9, "strict-mode byte identity", ok, "; ".join(details[:4]))
    assert ok
