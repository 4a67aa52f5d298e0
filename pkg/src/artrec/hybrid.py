"""Pairwise-ranking fusion of per-source scores.

A purchased item should outscore a sampled non-purchased item; the fusion
weights (one scalar per source) are learned by stochastic gradient ascent
on sum(ln sigmoid(w . (s_pos - s_neg))) - reg * ||w||^2 over sampled pairs.
Only the source weights are trained: items are one-of-a-kind, so per-item
latent factors would have nothing to learn from.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .errors import EmptyResultError, InputError, ParseError
from .features import Source
from .scoring import ScoredPool

if TYPE_CHECKING:
    from .evaluation import EvalCase

SOURCE_ORDER = (Source.METADATA, Source.DNN, Source.EVF)

# Keep sigma inside the open interval (0, 1): exp(-x) underflows to zero
# past |x| ~ 745, which would otherwise yield exactly 0 or 1.
_SIGMA_FLOOR = sys.float_info.min
_SIGMA_CEIL = math.nextafter(1.0, 0.0)


def sigma(x: float) -> float:
    """Numerically stable logistic sigmoid, clamped into (0, 1)."""
    if x >= 0.0:
        v = 1.0 / (1.0 + math.exp(-x))
    else:
        e = math.exp(x)
        v = e / (1.0 + e)
    return min(max(v, _SIGMA_FLOOR), _SIGMA_CEIL)


def log_sigma(x: float) -> float:
    """ln(sigmoid(x)) without underflow for large negative x."""
    if x >= 0.0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@dataclass(frozen=True)
class HybridWeights:
    """Per-source fusion coefficients."""

    w: dict[Source, float]

    def __post_init__(self):
        for source, value in self.w.items():
            if not isinstance(source, Source):
                raise InputError(f"weight key must be a Source, got {source!r}")
            if not math.isfinite(value):
                raise InputError(f"non-finite weight for {source.value}: {value}")
        object.__setattr__(self, "w", dict(self.w))

    @property
    def sources(self) -> tuple[Source, ...]:
        return tuple(s for s in SOURCE_ORDER if s in self.w)

    def get(self, source: Source) -> float:
        return self.w.get(source, 0.0)

    def as_array(self, sources: Sequence[Source]) -> np.ndarray:
        return np.array([self.get(s) for s in sources], dtype=np.float64)


@dataclass(frozen=True)
class BprConfig:
    """Hyperparameters of the fusion trainer; defaults are tuned for stable
    convergence at desk scale."""

    learning_rate: float = 0.05
    regularization: float = 1e-4
    epochs: int = 200
    negatives_per_positive: int = 5
    seed: int = 42
    sources: tuple[Source, ...] = SOURCE_ORDER

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InputError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.regularization < 0:
            raise InputError(f"regularization must be non-negative, got {self.regularization}")
        if self.epochs < 1:
            raise InputError(f"epochs must be >= 1, got {self.epochs}")
        if self.negatives_per_positive < 1:
            raise InputError(f"negatives_per_positive must be >= 1, got {self.negatives_per_positive}")
        if not 0 <= self.seed < 2 ** 64:
            raise InputError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        ordered = tuple(s for s in SOURCE_ORDER if s in self.sources)
        if not ordered:
            raise InputError("at least one source must be enabled")
        object.__setattr__(self, "sources", ordered)

    def for_sources(self, sources: Sequence[Source]) -> "BprConfig":
        return replace(self, sources=tuple(sources))


@dataclass(frozen=True)
class TrainingInstance:
    """Standardized per-source scores of one (purchased, sampled) item pair."""

    sources: tuple[Source, ...]
    s_pos: tuple[float, ...]
    s_neg: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.sources) == len(self.s_pos) == len(self.s_neg)):
            raise InputError("instance score vectors must match the enabled sources")

    @property
    def delta(self) -> tuple[float, ...]:
        return tuple(p - n for p, n in zip(self.s_pos, self.s_neg))


def build_training_instances(
    cases: Sequence["EvalCase"],
    pools_by_case: Sequence[Mapping[Source, ScoredPool]],
    cfg: BprConfig,
    case_offset: int = 0,
) -> tuple[list[TrainingInstance], dict[str, int]]:
    """Sample (positive, negative) pairs for every case, deterministically.

    For each purchased item of a case, `negatives_per_positive` distinct
    non-purchased items are drawn uniformly from the case's pool minus the
    transaction's own items, with an RNG stream seeded from (seed, case
    index).  `case_offset` shifts the index so that sampling one case at a
    time draws the same pairs as one pass over the whole list.  Items
    missing from some source's pool contribute score 0 for that source.
    """
    if len(cases) != len(pools_by_case):
        raise InputError("cases and pools_by_case must have the same length")
    instances: list[TrainingInstance] = []
    short_pools = 0
    for case_index, (case, pools) in enumerate(zip(cases, pools_by_case), start=case_offset):
        missing = [s.value for s in cfg.sources if s not in pools]
        if missing:
            raise InputError(f"case {case_index} lacks scored pools for: {', '.join(missing)}")
        positives = sorted(case.positives)
        candidates = [i for i in case.pool if i not in case.positives]
        rng = np.random.default_rng((cfg.seed, case_index))
        for positive in positives:
            n = min(cfg.negatives_per_positive, len(candidates))
            if n < cfg.negatives_per_positive:
                short_pools += 1
            if n == 0:
                continue
            chosen = rng.choice(len(candidates), size=n, replace=False)
            s_pos = tuple(pools[s].score_of(positive, default=0.0) for s in cfg.sources)
            for neg_idx in chosen.tolist():
                negative = candidates[neg_idx]
                s_neg = tuple(pools[s].score_of(negative, default=0.0) for s in cfg.sources)
                instances.append(TrainingInstance(cfg.sources, s_pos, s_neg))
    return instances, {"cases": len(cases), "short_pool_positives": short_pools}


def _delta_matrix(instances: Sequence[TrainingInstance], sources: Sequence[Source]) -> np.ndarray:
    rows = []
    for inst in instances:
        if inst.sources != tuple(sources):
            raise InputError("all instances must share the trainer's enabled sources")
        rows.append(inst.delta)
    return np.array(rows, dtype=np.float64)


def bpr_objective(instances: Sequence[TrainingInstance], w: HybridWeights,
                  regularization: float) -> float:
    """Full-batch criterion: sum of ln sigmoid(w . delta) minus the L2 penalty."""
    if not instances:
        return 0.0
    sources = instances[0].sources
    deltas = _delta_matrix(instances, sources)
    wv = w.as_array(sources)
    x = deltas @ wv
    loglik = float(np.sum(-np.logaddexp(0.0, -x)))
    return loglik - regularization * float(np.dot(wv, wv))


def bpr_gradient(instance: TrainingInstance, w: HybridWeights,
                 regularization: float) -> np.ndarray:
    """Gradient of one instance's objective (penalty applied per update)."""
    wv = w.as_array(instance.sources)
    d = np.array(instance.delta, dtype=np.float64)
    g = 1.0 - sigma(float(np.dot(wv, d)))
    return g * d - 2.0 * regularization * wv


@dataclass(frozen=True)
class TrainResult:
    weights: HybridWeights
    objectives: tuple[float, ...]  # full-batch objective after each epoch


def train(instances: Sequence[TrainingInstance], cfg: BprConfig) -> TrainResult:
    """SGD over shuffled instances from w = 0; bit-reproducible for a fixed seed."""
    if not instances:
        raise EmptyResultError("cannot train on an empty instance list")
    sources = cfg.sources
    deltas = _delta_matrix(instances, sources)
    delta_rows = [tuple(row) for row in deltas.tolist()]
    n_sources = len(sources)
    lr = cfg.learning_rate
    reg = cfg.regularization
    w = [0.0] * n_sources
    rng = np.random.default_rng(cfg.seed)
    objectives = []
    for _ in range(cfg.epochs):
        for idx in rng.permutation(len(delta_rows)).tolist():
            d = delta_rows[idx]
            x = 0.0
            for s in range(n_sources):
                x += w[s] * d[s]
            g = 1.0 - sigma(x)
            for s in range(n_sources):
                w[s] += lr * (g * d[s] - 2.0 * reg * w[s])
        wv = np.array(w)
        obj = float(np.sum(-np.logaddexp(0.0, -(deltas @ wv)))) - reg * float(np.dot(wv, wv))
        objectives.append(obj)
    weights = HybridWeights({s: w[i] for i, s in enumerate(sources)})
    return TrainResult(weights=weights, objectives=tuple(objectives))


def hybrid_score(pools: Mapping[Source, ScoredPool], w: HybridWeights) -> ScoredPool:
    """Weighted sum of per-source standardized scores over the pools' union.

    Items absent from one source's pool contribute 0 for that source.
    """
    if not pools:
        raise EmptyResultError("no source pools to combine")
    first = next(iter(pools.values())).ids
    if all(p.ids is first or p.ids == first for p in pools.values()):
        # Aligned pools: skip the per-item lookups.
        if not first:
            raise EmptyResultError("cannot combine empty pools")
        total = np.zeros(len(first), dtype=np.float64)
        for source, pool in pools.items():
            total += w.get(source) * pool.scores
        return ScoredPool(first, total)
    union: set[str] = set()
    for pool in pools.values():
        union.update(pool.ids)
    if not union:
        raise EmptyResultError("cannot combine empty pools")
    ids = tuple(sorted(union))
    total = np.zeros(len(ids), dtype=np.float64)
    for source, pool in pools.items():
        weight = w.get(source)
        if weight == 0.0:
            continue
        scores = np.array([pool.score_of(i, default=0.0) for i in ids])
        total += weight * scores
    return ScoredPool(ids, total)


def write_weights(path: str | Path, weights: HybridWeights, seed: int) -> None:
    """Persist weights as `source_name weight` lines plus a seed comment."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#seed {seed}\n")
        for source in weights.sources:
            fh.write(f"{source.value} {repr(weights.get(source))}\n")


def read_weights(path: str | Path) -> tuple[HybridWeights, int | None]:
    path = Path(path)
    by_name = {s.value: s for s in SOURCE_ORDER}
    w: dict[Source, float] = {}
    seed: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "seed":
                    try:
                        seed = int(parts[1])
                    except ValueError:
                        raise ParseError(path, lineno, f"bad seed: {parts[1]!r}") from None
                continue
            parts = line.split()
            if len(parts) != 2 or parts[0] not in by_name:
                raise ParseError(path, lineno, f"expected '<source> <weight>', got {line!r}")
            try:
                value = float(parts[1])
            except ValueError:
                raise ParseError(path, lineno, f"bad weight: {parts[1]!r}") from None
            source = by_name[parts[0]]
            if source in w:
                raise ParseError(path, lineno, f"duplicate source: {parts[0]}")
            w[source] = value
    if not w:
        raise ParseError(path, 1, "no weights found")
    return HybridWeights(w), seed
