"""Content-based candidate scoring against a user's purchase profile.

A candidate's score is the max (default) or mean cosine similarity to the
profile's items under one feature source.  Scores are z-standardized per
pool so different sources become comparable before hybrid fusion.
"""

from __future__ import annotations

import enum
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .catalog import Catalog, available_items, profile_before
from .errors import EmptyResultError, InputError
from .features import FeatureStore, Source, cosine

# Pools with score spread below this are considered constant and map to 0.
DEGENERATE_STD = 1e-12


class Aggregation(enum.Enum):
    """How per-profile-item similarities combine into one candidate score."""

    MAX = "max"
    MEAN = "mean"


@dataclass(frozen=True)
class ScoredPool:
    """Scores over one candidate pool; ids are kept sorted ascending."""

    ids: tuple[str, ...]
    scores: np.ndarray
    skipped: tuple[str, ...] = ()

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.shape != (len(self.ids),):
            raise InputError(f"scores shape {scores.shape} does not match {len(self.ids)} ids")
        if not np.isfinite(scores).all():
            raise InputError("pool scores must be finite")
        if any(self.ids[i] >= self.ids[i + 1] for i in range(len(self.ids) - 1)):
            raise InputError("pool ids must be strictly ascending")
        scores = scores.copy()
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    @classmethod
    def from_dict(cls, scores: Mapping[str, float], skipped: Iterable[str] = ()) -> "ScoredPool":
        ids = tuple(sorted(scores))
        return cls(ids, np.array([scores[i] for i in ids], dtype=np.float64), tuple(skipped))

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, item_id: str) -> bool:
        i = bisect_left(self.ids, item_id)
        return i < len(self.ids) and self.ids[i] == item_id

    def score_of(self, item_id: str, default: float | None = None) -> float:
        i = bisect_left(self.ids, item_id)
        if i < len(self.ids) and self.ids[i] == item_id:
            return float(self.scores[i])
        if default is None:
            raise KeyError(item_id)
        return default

    def as_dict(self) -> dict[str, float]:
        return {item: float(s) for item, s in zip(self.ids, self.scores)}


def _cosine_matrix(candidates: np.ndarray, cand_norms: np.ndarray,
                   profile: np.ndarray, prof_norms: np.ndarray) -> np.ndarray:
    """Pairwise cosines, shape (n_candidates, n_profile); zero vectors give 0."""
    denom = np.outer(cand_norms, prof_norms)
    sims = candidates @ profile.T
    out = np.divide(sims, denom, out=np.zeros_like(sims), where=denom > 0)
    return np.clip(out, -1.0, 1.0)


def score_candidates(store: FeatureStore, profile_ids: Iterable[str],
                     candidate_rows: np.ndarray, agg: Aggregation) -> np.ndarray:
    """Aggregated similarity of each candidate row (store indices) to the profile.

    Profile items lacking a vector in the store are ignored; if none remain
    the profile is effectively empty and an error is raised.
    """
    prof_rows = [store.index[i] for i in profile_ids if i in store]
    if not prof_rows:
        raise EmptyResultError(f"no profile vectors available in {store.source.value} store")
    profile = store.matrix[prof_rows]
    prof_norms = store.norms[prof_rows]
    cands = store.matrix[candidate_rows]
    cand_norms = store.norms[candidate_rows]
    sims = _cosine_matrix(cands, cand_norms, profile, prof_norms)
    if agg is Aggregation.MAX:
        return sims.max(axis=1) if sims.shape[0] else np.zeros(0)
    return sims.mean(axis=1) if sims.shape[0] else np.zeros(0)


def score_item(profile: list[np.ndarray], candidate: np.ndarray, agg: Aggregation) -> float:
    """Max or mean cosine between the candidate and each profile vector."""
    if not profile:
        raise EmptyResultError("profile must be non-empty")
    sims = [cosine(candidate, p) for p in profile]
    return max(sims) if agg is Aggregation.MAX else sum(sims) / len(sims)


def score_pool(catalog: Catalog, store: FeatureStore, user: str, t: int,
               agg: Aggregation = Aggregation.MAX) -> ScoredPool:
    """Score every available item at time t, minus the user's prior purchases.

    Pool items without a vector in the store are skipped and reported via
    `ScoredPool.skipped`.
    """
    profile = profile_before(catalog, user, t)
    if not profile:
        raise EmptyResultError(f"user {user} has no purchases before t={t}")
    pool = available_items(catalog, t) - set(profile)
    kept = sorted(i for i in pool if i in store)
    skipped = tuple(sorted(pool - set(kept)))
    rows = np.array([store.index[i] for i in kept], dtype=np.intp)
    scores = score_candidates(store, profile, rows, agg)
    return ScoredPool(tuple(kept), scores, skipped)


def standardize(pool: ScoredPool) -> ScoredPool:
    """Z-score the pool; a (near-)constant pool maps to all zeros."""
    if len(pool) == 0:
        raise EmptyResultError("cannot standardize an empty pool")
    mu = float(np.mean(pool.scores))
    sigma = float(np.std(pool.scores))
    if sigma < DEGENERATE_STD:
        z = np.zeros(len(pool))
    else:
        z = (pool.scores - mu) / sigma
    return ScoredPool(pool.ids, z, pool.skipped)


def zscore_store(store: FeatureStore) -> FeatureStore:
    """Standardize each vector dimension across items (population statistics).

    Used for EVF vectors, whose components have heterogeneous scales;
    dimensions with (near-)zero spread map to 0.
    """
    mu = store.matrix.mean(axis=0)
    sigma = store.matrix.std(axis=0)
    safe = np.where(sigma < DEGENERATE_STD, 1.0, sigma)
    z = np.where(sigma < DEGENERATE_STD, 0.0, (store.matrix - mu) / safe)
    return FeatureStore(store.source, store.ids, z)


def rank_top_k(pool: ScoredPool, k: int) -> list[str]:
    """Top-k item ids by score descending, ties broken by ascending item id."""
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    # ids are sorted ascending, so a stable sort on -score breaks ties by id.
    order = np.argsort(-pool.scores, kind="stable")[:k]
    return [pool.ids[i] for i in order]
