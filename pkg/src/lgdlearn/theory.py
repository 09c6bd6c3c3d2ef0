"""Closed-form feasibility bounds and expected pattern censuses.

The label-shift construction works only when the clean ("main") pattern keeps
its scale advantage over every other regular pattern after a beta-fraction of
samples has been shifted. This module provides:

* the bound on the pollution ratio eta and the two bounds on the selection
  rate beta (a basic one, and a tightened one requiring the clean pattern to
  be at least ``delta`` times the reverse pattern), for both noise sources,
* analytic censuses of the expected number of samples in each
  (selected/leftover) x pattern cell before and after shifting,
* Monte Carlo simulators producing empirical censuses for cross-validation,
* :func:`check_config`, which aggregates all applicable bounds into a
  :class:`FeasibilityReport`.

Basic bounds are strict inequalities; dominance-factor bounds are
non-strict, mirroring their derivations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ASYMMETRIC, SYMMETRIC, Dataset, NoiseSpec, inject_noise, make_reverse_split
from .errors import CensusInvalidError
from .seeding import make_rng

SYM_ETA_COND = "symmetric eta bound: eta < (k-1)/k"
SYM_BETA_BASIC_COND = "symmetric beta bound (basic): beta < (1-eta)/(2-2eta-eta/(k-1))"
SYM_BETA_DELTA_COND = "symmetric beta bound (dominance): beta <= (1-eta)/((1+delta)(1-eta)-eta/(k-1))"
ASYM_ETA_COND = "asymmetric eta bound: eta < 1/2"
ASYM_BETA_BASIC_COND = "asymmetric beta bound (basic): beta < 1/2"
ASYM_BETA_DELTA_COND = "asymmetric beta bound (dominance): beta <= 1/(1+delta)"


@dataclass(frozen=True)
class BoundsQuery:
    """Inputs to the feasibility check: class count, pollution ratio,
    selection rate, and the dominance factor delta (>= 1)."""

    k: int
    eta: float
    beta: float
    delta: float = 9.0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"class count must be >= 2, got {self.k}")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie strictly inside (0, 1), got {self.eta}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie strictly inside (0, 1), got {self.beta}")
        if self.delta < 1.0:
            raise ValueError(f"delta must be >= 1, got {self.delta}")


def expected_true_after_shift(r: float, k: int) -> float:
    """Expected number of fully polluted labels that land on the truth when
    shifted by +1: r / (k - 1)."""
    if r < 0:
        raise ValueError(f"polluted count must be >= 0, got {r}")
    if k < 2:
        raise ValueError(f"class count must be >= 2, got {k}")
    return r / (k - 1)


def symmetric_eta_bound(k: int) -> float:
    """Upper bound (exclusive) on eta for the symmetric source: (k-1)/k."""
    if k < 2:
        raise ValueError(f"class count must be >= 2, got {k}")
    return (k - 1) / k


def symmetric_beta_bound(eta: float, k: int) -> float:
    """Basic selection-rate bound (exclusive) for symmetric noise:
    (1-eta) / (2 - 2*eta - eta/(k-1))."""
    if not 0.0 <= eta < symmetric_eta_bound(k):
        raise ValueError(f"eta={eta} is infeasible for k={k} (needs eta < {(k - 1) / k})")
    return (1.0 - eta) / (2.0 - 2.0 * eta - eta / (k - 1))


def symmetric_beta_bound_delta(eta: float, k: int, delta: float) -> float:
    """Dominance-tightened selection-rate bound (inclusive) for symmetric noise:
    (1-eta) / ((1+delta)(1-eta) - eta/(k-1)). Reduces to the basic bound at
    delta = 1."""
    if delta < 1.0:
        raise ValueError(f"delta must be >= 1, got {delta}")
    if not 0.0 <= eta < symmetric_eta_bound(k):
        raise ValueError(f"eta={eta} is infeasible for k={k} (needs eta < {(k - 1) / k})")
    return (1.0 - eta) / ((1.0 + delta) * (1.0 - eta) - eta / (k - 1))


def asymmetric_feasible(eta: float, beta: float) -> bool:
    """Basic feasibility for asymmetric noise: eta < 1/2 and beta < 1/2."""
    if not (0.0 < eta < 1.0 and 0.0 < beta < 1.0):
        raise ValueError("eta and beta must lie strictly inside (0, 1)")
    return eta < 0.5 and beta < 0.5


def asymmetric_beta_bound_delta(delta: float) -> float:
    """Dominance-tightened selection-rate bound (inclusive) for asymmetric
    noise: 1 / (1 + delta). Reduces to the basic 1/2 bound at delta = 1."""
    if delta < 1.0:
        raise ValueError(f"delta must be >= 1, got {delta}")
    return 1.0 / (1.0 + delta)


@dataclass(frozen=True)
class PatternCensus:
    """Expected (or empirical) sample counts per (selected/leftover) x pattern
    cell, before and after label shifting. After-shift cells always sum to n."""

    n: float
    before: dict
    after: dict

    def __post_init__(self):
        for name, count in {**self.before, **self.after}.items():
            if count < 0:
                raise ValueError(f"census cell {name!r} is negative: {count}")
        total = sum(self.after.values())
        if abs(total - self.n) > 1e-6 * max(self.n, 1.0):
            raise ValueError(f"after-shift cells sum to {total}, expected n={self.n}")


def pattern_census_symmetric(n: float, eta: float, beta: float, k: int) -> PatternCensus:
    """Analytic census for symmetric noise.

    Before shifting the selected/leftover rows split the chaos and clean
    patterns proportionally. Shifting the selected samples turns their clean
    part into a new regular pattern and sends a 1/(k-1) share of their chaos
    part back onto true labels.
    """
    BoundsQuery(k=k, eta=eta, beta=beta, delta=1.0)
    before = {
        "selected_chaos": eta * beta * n,
        "selected_clean": (1 - eta) * beta * n,
        "leftover_chaos": eta * (1 - beta) * n,
        "leftover_clean": (1 - eta) * (1 - beta) * n,
    }
    after = {
        "selected_chaos": eta * beta * (k - 2) / (k - 1) * n,
        "selected_shifted": (1 - eta) * beta * n,
        "selected_clean": eta * beta / (k - 1) * n,
        "leftover_chaos": eta * (1 - beta) * n,
        "leftover_clean": (1 - eta) * (1 - beta) * n,
    }
    return PatternCensus(n=n, before=before, after=after)


def pattern_census_asymmetric(
    n: float, eta: float, beta: float, k: int | None = None, flip_map=None
) -> PatternCensus:
    """Analytic census for asymmetric noise.

    All samples belong to regular patterns; shifting the selected samples turns
    their polluted part and clean part into two new regular patterns. The
    selected-clean-after-shift cell is exactly 0, which requires the flip map
    to avoid both f(y) == y+1 and f(y) == y-1 (mod k); when ``flip_map`` and
    ``k`` are supplied, a colliding map raises :class:`CensusInvalidError`.
    """
    BoundsQuery(k=k if k is not None else 2, eta=eta, beta=beta, delta=1.0)
    if flip_map is not None:
        if k is None:
            raise ValueError("k is required to validate a flip map")
        flip_map = np.asarray(flip_map, dtype=np.int64)
        classes = np.arange(k)
        if np.any(flip_map == (classes + 1) % k) or np.any(flip_map == (classes - 1) % k):
            raise CensusInvalidError(
                "flip map collides with the +1 shift rule; census cells are not exact"
            )
    before = {
        "selected_polluted": eta * beta * n,
        "selected_clean": (1 - eta) * beta * n,
        "leftover_polluted": eta * (1 - beta) * n,
        "leftover_clean": (1 - eta) * (1 - beta) * n,
    }
    after = {
        "selected_shifted_polluted": eta * beta * n,
        "selected_shifted_clean": (1 - eta) * beta * n,
        "selected_clean": 0.0,
        "leftover_polluted": eta * (1 - beta) * n,
        "leftover_clean": (1 - eta) * (1 - beta) * n,
    }
    return PatternCensus(n=n, before=before, after=after)


def _census_base(n: int, k: int, seed):
    rng = make_rng(seed, "oracle")
    oracle = rng.integers(0, k, size=n)
    features = np.zeros((n, 1))
    return Dataset(features, oracle, oracle_labels=oracle, k=k)


def simulate_census_symmetric(n: int, eta: float, beta: float, k: int, seed) -> PatternCensus:
    """Empirical census: inject symmetric noise, draw a reverse split, and
    count every cell by provenance. Used to cross-validate the analytic
    census (and, transitively, the injection and split machinery)."""
    ds = _census_base(n, k, seed)
    noisy = inject_noise(ds, NoiseSpec(SYMMETRIC, eta), make_rng(seed, "noise"))
    split = make_reverse_split(noisy, beta, make_rng(seed, "split"))
    selected = np.zeros(n, dtype=bool)
    selected[split.reverse_idx] = True
    corrupted = noisy.labels != ds.oracle()
    final = split.dataset.labels
    truth = final == ds.oracle()
    before = {
        "selected_chaos": float(np.sum(selected & corrupted)),
        "selected_clean": float(np.sum(selected & ~corrupted)),
        "leftover_chaos": float(np.sum(~selected & corrupted)),
        "leftover_clean": float(np.sum(~selected & ~corrupted)),
    }
    after = {
        "selected_chaos": float(np.sum(selected & corrupted & ~truth)),
        "selected_shifted": float(np.sum(selected & ~corrupted)),
        "selected_clean": float(np.sum(selected & corrupted & truth)),
        "leftover_chaos": float(np.sum(~selected & corrupted)),
        "leftover_clean": float(np.sum(~selected & ~corrupted)),
    }
    return PatternCensus(n=n, before=before, after=after)


def simulate_census_asymmetric(
    n: int, eta: float, beta: float, k: int, seed, flip_map=None
) -> PatternCensus:
    """Empirical census for asymmetric noise; cells counted by provenance."""
    ds = _census_base(n, k, seed)
    spec = NoiseSpec(ASYMMETRIC, eta, flip_map=flip_map)
    noisy = inject_noise(ds, spec, make_rng(seed, "noise"))
    split = make_reverse_split(noisy, beta, make_rng(seed, "split"))
    selected = np.zeros(n, dtype=bool)
    selected[split.reverse_idx] = True
    corrupted = noisy.labels != ds.oracle()
    truth = split.dataset.labels == ds.oracle()
    before = {
        "selected_polluted": float(np.sum(selected & corrupted)),
        "selected_clean": float(np.sum(selected & ~corrupted)),
        "leftover_polluted": float(np.sum(~selected & corrupted)),
        "leftover_clean": float(np.sum(~selected & ~corrupted)),
    }
    after = {
        "selected_shifted_polluted": float(np.sum(selected & corrupted & ~truth)),
        "selected_shifted_clean": float(np.sum(selected & ~corrupted & ~truth)),
        "selected_clean": float(np.sum(selected & truth)),
        "leftover_polluted": float(np.sum(~selected & corrupted)),
        "leftover_clean": float(np.sum(~selected & ~corrupted)),
    }
    return PatternCensus(n=n, before=before, after=after)


@dataclass(frozen=True)
class FeasibilityReport:
    """Aggregated bound check; ``feasible`` holds iff no condition is violated.

    Beta bounds are clamped to 1.0 (a proportion bound above 1 means
    "unconstrained"); the raw formula values are kept alongside.
    """

    source: str
    k: int
    eta: float
    beta: float
    delta: float
    eta_bound: float
    beta_bound_basic: float | None
    beta_bound_delta: float | None
    beta_bound_basic_raw: float | None
    beta_bound_delta_raw: float | None
    feasible: bool
    violated_conditions: tuple

    def __post_init__(self):
        if self.feasible != (len(self.violated_conditions) == 0):
            raise ValueError("feasible must hold exactly when no condition is violated")

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "k": self.k,
            "eta": self.eta,
            "beta": self.beta,
            "delta": self.delta,
            "eta_bound": self.eta_bound,
            "beta_bound_basic": self.beta_bound_basic,
            "beta_bound_delta": self.beta_bound_delta,
            "beta_bound_basic_raw": self.beta_bound_basic_raw,
            "beta_bound_delta_raw": self.beta_bound_delta_raw,
            "feasible": self.feasible,
            "violated_conditions": list(self.violated_conditions),
        }


def _clamp(bound: float) -> float:
    return min(bound, 1.0)


def check_config(query: BoundsQuery, source: str) -> FeasibilityReport:
    """Evaluate every applicable inequality for the given noise source and
    report which ones fail. Symmetric beta bounds are only computable when the
    eta bound holds; they are reported as None otherwise."""
    if source not in (SYMMETRIC, ASYMMETRIC):
        raise ValueError(f"noise source must be '{SYMMETRIC}' or '{ASYMMETRIC}', got {source!r}")
    violated = []
    if source == SYMMETRIC:
        eta_bound = symmetric_eta_bound(query.k)
        if query.eta < eta_bound:
            basic_raw = symmetric_beta_bound(query.eta, query.k)
            delta_raw = symmetric_beta_bound_delta(query.eta, query.k, query.delta)
            if not query.beta < basic_raw:
                violated.append(SYM_BETA_BASIC_COND)
            if not query.beta <= delta_raw:
                violated.append(SYM_BETA_DELTA_COND)
            basic, delta_bound = _clamp(basic_raw), _clamp(delta_raw)
        else:
            violated.append(SYM_ETA_COND)
            basic_raw = delta_raw = basic = delta_bound = None
    else:
        eta_bound = 0.5
        if not query.eta < eta_bound:
            violated.append(ASYM_ETA_COND)
        basic_raw = 0.5
        delta_raw = asymmetric_beta_bound_delta(query.delta)
        if not query.beta < basic_raw:
            violated.append(ASYM_BETA_BASIC_COND)
        if not query.beta <= delta_raw:
            violated.append(ASYM_BETA_DELTA_COND)
        basic, delta_bound = _clamp(basic_raw), _clamp(delta_raw)
    return FeasibilityReport(
        source=source,
        k=query.k,
        eta=query.eta,
        beta=query.beta,
        delta=query.delta,
        eta_bound=eta_bound,
        beta_bound_basic=basic,
        beta_bound_delta=delta_bound,
        beta_bound_basic_raw=basic_raw,
        beta_bound_delta_raw=delta_raw,
        feasible=not violated,
        violated_conditions=tuple(violated),
    )
