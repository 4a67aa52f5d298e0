"""Chronological replay evaluation of recommendation methods.

Each past transaction whose user already owned at least one item becomes a
test case: the recommender sees only what was known just before the sale
(the user's earlier purchases, the items still unsold) and is asked to rank
the pool.  Ranking quality is macro-averaged over cases.
"""

from __future__ import annotations

from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import log2
from typing import Mapping, Sequence

import numpy as np

from .catalog import Catalog, available_items, profile_before
from .errors import EmptyResultError, InputError
from .features import FeatureStore, Source
from .hybrid import (BprConfig, HybridWeights, TrainingInstance,
                     build_training_instances, hybrid_score, train)
from .scoring import Aggregation, ScoredPool, rank_top_k, score_candidates, standardize, zscore_store


@dataclass(frozen=True)
class EvalCase:
    """One replayed transaction: what was known and what was bought."""

    user: str
    timestamp: int
    profile: tuple[str, ...]  # earlier purchases, oldest first
    positives: frozenset[str]  # the transaction's items
    pool: tuple[str, ...]  # unsold at the time, minus the profile, ascending

    def __post_init__(self):
        if not self.profile:
            raise InputError("case profile must be non-empty")
        if not self.positives:
            raise InputError("case must have at least one positive")
        if any(self.pool[i] >= self.pool[i + 1] for i in range(len(self.pool) - 1)):
            raise InputError("case pool must be strictly ascending")
        pool_set = set(self.pool)
        if not self.positives <= pool_set:
            raise InputError(f"positives missing from pool for user {self.user} at t={self.timestamp}")
        if pool_set & set(self.profile):
            raise InputError(f"pool and profile overlap for user {self.user} at t={self.timestamp}")


def build_cases(catalog: Catalog) -> list[EvalCase]:
    """Replay transactions in timestamp order, one case per transaction whose
    user has a non-empty strictly-earlier profile.

    Transactions sharing a timestamp see the same availability and do not
    see each other's purchases.
    """
    all_ids = sorted(catalog.items)
    sold: set[str] = set()
    history: dict[str, list[str]] = {}
    cases: list[EvalCase] = []
    n = len(catalog.transactions)
    i = 0
    while i < n:
        j = i
        t = catalog.transactions[i].timestamp
        while j < n and catalog.transactions[j].timestamp == t:
            j += 1
        unsold = [item for item in all_ids if item not in sold]
        for tx in catalog.transactions[i:j]:
            prior = history.get(tx.user)
            if prior:
                profile_set = set(prior)
                pool = tuple(item for item in unsold if item not in profile_set)
                cases.append(EvalCase(tx.user, t, tuple(prior), frozenset(tx.items), pool))
        for tx in catalog.transactions[i:j]:
            sold.update(tx.items)
            history.setdefault(tx.user, []).extend(tx.items)
        i = j
    return cases


def precision_at_k(ranking: Sequence[str], positives: frozenset[str] | set[str], k: int) -> float:
    """Fraction of the first k ranked items that were actually bought."""
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    hits = sum(1 for item in ranking[:k] if item in positives)
    return hits / k


def recall_at_k(ranking: Sequence[str], positives: frozenset[str] | set[str], k: int) -> float:
    """Fraction of the bought items that appear in the first k."""
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    if not positives:
        raise InputError("positives must be non-empty")
    hits = sum(1 for item in ranking[:k] if item in positives)
    return hits / len(positives)


def ndcg_at_k(ranking: Sequence[str], positives: frozenset[str] | set[str], k: int) -> float:
    """Binary-relevance nDCG: gains 1/log2(rank+1), normalized by the ideal
    ordering of min(len(positives), k) hits."""
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    if not positives:
        raise InputError("positives must be non-empty")
    dcg = sum(1.0 / log2(rank + 2) for rank, item in enumerate(ranking[:k]) if item in positives)
    idcg = sum(1.0 / log2(rank + 2) for rank in range(min(len(positives), k)))
    return dcg / idcg


@dataclass(frozen=True)
class MethodSpec:
    """A rankable method: which sources it reads and whether they are fused
    with learned weights."""

    name: str
    sources: tuple[Source, ...]
    hybrid: bool


METHOD_SPECS = (
    MethodSpec("Metadata", (Source.METADATA,), False),
    MethodSpec("DNN", (Source.DNN,), False),
    MethodSpec("EVF", (Source.EVF,), False),
    MethodSpec("Hyb(DNN+EVF)", (Source.DNN, Source.EVF), True),
    MethodSpec("Hyb(DNN+EVF+Metadata)", (Source.METADATA, Source.DNN, Source.EVF), True),
)
CANONICAL_METHODS = tuple(m.name for m in METHOD_SPECS)
_SPEC_BY_NAME = {m.name: m for m in METHOD_SPECS}
_METRICS = ("ndcg", "rec", "prec")


def resolve_methods(names: Sequence[str]) -> tuple[MethodSpec, ...]:
    if not names:
        raise InputError("at least one method is required")
    specs = []
    seen = set()
    for name in names:
        if name not in _SPEC_BY_NAME:
            raise InputError(f"unknown method {name!r}; valid: {', '.join(CANONICAL_METHODS)}")
        if name in seen:
            raise InputError(f"duplicate method: {name}")
        seen.add(name)
        specs.append(_SPEC_BY_NAME[name])
    return tuple(specs)


@dataclass(frozen=True)
class EvalReport:
    """Macro-averaged metrics per method plus run diagnostics."""

    methods: tuple[str, ...]
    ks: tuple[int, ...]
    values: dict[str, dict[str, float]]  # method -> "ndcg@5" etc -> value
    cases: int
    diagnostics: dict[str, object]

    def _columns(self) -> list[str]:
        return [f"{metric}@{k}" for metric in _METRICS for k in self.ks]

    def to_csv(self) -> str:
        lines = ["method," + ",".join(self._columns()) + ",cases"]
        for method in self.methods:
            row = self.values[method]
            cells = [f"{row[col]:.6f}" for col in self._columns()]
            lines.append(",".join([method] + cells + [str(self.cases)]))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        columns = self._columns()
        name_width = max(len("method"), max(len(m) for m in self.methods))
        header = "  ".join(["method".ljust(name_width)] + [c.rjust(8) for c in columns] + ["cases"])
        lines = [header]
        for method in self.methods:
            row = self.values[method]
            cells = [f"{row[col]:.6f}".rjust(8) for col in columns]
            lines.append("  ".join([method.ljust(name_width)] + cells + [str(self.cases)]))
        lines.append("")
        lines.append(f"cases: {self.cases}")
        skipped = self.diagnostics.get("skipped", {})
        if any(skipped.values()):
            parts = ", ".join(f"{name} {count}" for name, count in skipped.items())
            lines.append(f"pool items without a vector (skipped): {parts}")
        unscored = self.diagnostics.get("unscored_profiles", 0)
        if unscored:
            lines.append(f"case profiles with no vectors in some source (scored 0): {unscored}")
        short = self.diagnostics.get("short_pool_positives", 0)
        if short:
            lines.append(f"positives with fewer sampling candidates than requested: {short}")
        weights = self.diagnostics.get("weights", {})
        if weights:
            if self.diagnostics.get("mode") == "temporal":
                fallbacks = self.diagnostics.get("temporal_fallbacks", 0)
                lines.append("hybrid weights: per case, trained on strictly earlier cases"
                             f" (uniform fallback for {fallbacks} early cases); final values:")
            else:
                lines.append("hybrid weights: trained once on all replay cases, then applied"
                             " to every case (cases therefore contribute to their own weights):")
            for method, per_source in weights.items():
                pairs = ", ".join(f"{name}={value:.6f}" for name, value in per_source.items())
                lines.append(f"  {method}: {pairs}")
        return "\n".join(lines) + "\n"


def _case_source_pool(store: FeatureStore, case: EvalCase, agg: Aggregation) -> tuple[ScoredPool, bool]:
    """Score one case's pool under one source; items without vectors are
    skipped, a profile with no vectors at all yields zeros (flagged)."""
    missing = [item for item in case.pool if item not in store]
    if missing:
        kept = tuple(item for item in case.pool if item in store)
    else:
        kept = case.pool
    rows = np.array([store.index[item] for item in kept], dtype=np.intp)
    try:
        scores = score_candidates(store, case.profile, rows, agg)
    except EmptyResultError:
        return ScoredPool(kept, np.zeros(len(kept)), tuple(missing)), True
    return ScoredPool(kept, scores, tuple(missing)), False


def _uniform_weights(sources: Sequence[Source]) -> HybridWeights:
    return HybridWeights({s: 1.0 for s in sources})


def evaluate(
    catalog: Catalog,
    stores: Mapping[Source, FeatureStore],
    methods: Sequence[str] = CANONICAL_METHODS,
    ks: Sequence[int] = (5, 10),
    agg: Aggregation = Aggregation.MAX,
    bpr: BprConfig | None = None,
    temporal_weights: bool = False,
    standardize_scores: bool = True,
    jobs: int = 1,
    fixed_weights: Mapping[str, HybridWeights] | None = None,
) -> EvalReport:
    """Replay the catalog and macro-average ranking metrics per method.

    Fusion weights are trained once on pairs sampled from every case
    (default) or, with `temporal_weights`, retrained per case on strictly
    earlier cases only, falling back to uniform weights when there are none.
    `fixed_weights` (method name to HybridWeights) bypasses training for the
    named hybrid methods.  `jobs` parallelizes the per-case scoring; results
    do not depend on it.
    """
    specs = resolve_methods(methods)
    ks = tuple(dict.fromkeys(int(k) for k in ks))
    if not ks or any(k < 1 for k in ks):
        raise InputError(f"cutoffs must be positive integers, got {ks!r}")
    if jobs < 1:
        raise InputError(f"jobs must be >= 1, got {jobs}")
    if bpr is None:
        bpr = BprConfig()

    needed = tuple(s for s in Source if any(s in spec.sources for spec in specs))
    for source in needed:
        if source not in stores:
            raise InputError(f"missing feature source: {source.value}")
    work_stores = {s: stores[s] for s in needed}
    if Source.EVF in work_stores:
        work_stores[Source.EVF] = zscore_store(work_stores[Source.EVF])

    cases = build_cases(catalog)
    if not cases:
        raise EmptyResultError("no transaction has a non-empty earlier profile to evaluate")

    def _pools_for(case: EvalCase) -> tuple[dict[Source, ScoredPool], int]:
        pools: dict[Source, ScoredPool] = {}
        unscored = 0
        for source in needed:
            pool, profile_unscored = _case_source_pool(work_stores[source], case, agg)
            if profile_unscored:
                unscored += 1
            if standardize_scores and len(pool):
                pool = standardize(pool)
            pools[source] = pool
        return pools, unscored

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            scored_cases = list(executor.map(_pools_for, cases))
    else:
        scored_cases = [_pools_for(case) for case in cases]
    skipped = {s.value: 0 for s in needed}
    unscored_profiles = 0
    pools_by_case: list[dict[Source, ScoredPool]] = []
    for pools, unscored in scored_cases:
        unscored_profiles += unscored
        for source in needed:
            skipped[source.value] += len(pools[source].skipped)
        pools_by_case.append(pools)

    diagnostics: dict[str, object] = {
        "mode": "temporal" if temporal_weights else "global",
        "skipped": skipped,
        "unscored_profiles": unscored_profiles,
        "short_pool_positives": 0,
        "weights": {},
        "objective": {},
    }

    # Weights per hybrid method: one set (global) or one per case (temporal).
    global_weights: dict[str, HybridWeights] = {}
    case_weights: dict[str, list[HybridWeights]] = {}
    all_timestamps = [case.timestamp for case in cases]
    if temporal_weights:
        # Cases in the first timestamp group have nothing earlier to train on.
        diagnostics["temporal_fallbacks"] = sum(
            1 for case in cases if bisect_left(all_timestamps, case.timestamp) == 0)
    for spec in specs:
        if not spec.hybrid:
            continue
        cfg = bpr.for_sources(spec.sources)
        if fixed_weights is not None and spec.name in fixed_weights:
            global_weights[spec.name] = fixed_weights[spec.name]
            diagnostics["weights"][spec.name] = {
                s.value: global_weights[spec.name].get(s) for s in cfg.sources}
            continue
        if not temporal_weights:
            instances, diag = build_training_instances(cases, pools_by_case, cfg)
            diagnostics["short_pool_positives"] = diag["short_pool_positives"]
            if instances:
                result = train(instances, cfg)
                global_weights[spec.name] = result.weights
                diagnostics["objective"][spec.name] = result.objectives[-1]
            else:
                global_weights[spec.name] = _uniform_weights(cfg.sources)
            diagnostics["weights"][spec.name] = {
                s.value: global_weights[spec.name].get(s) for s in cfg.sources}
            continue
        per_case: list[list[TrainingInstance]] = []
        for index, (case, pools) in enumerate(zip(cases, pools_by_case)):
            instances, diag = build_training_instances([case], [pools], cfg, case_offset=index)
            diagnostics["short_pool_positives"] += diag["short_pool_positives"]
            per_case.append(instances)
        flat: list[TrainingInstance] = []
        cumulative = []  # instances available after each case
        for instances in per_case:
            flat.extend(instances)
            cumulative.append(len(flat))
        trained: dict[int, HybridWeights] = {}
        weights_list: list[HybridWeights] = []
        for case in cases:
            if case.timestamp not in trained:
                boundary = bisect_left(all_timestamps, case.timestamp)
                training = flat[:cumulative[boundary - 1]] if boundary > 0 else []
                if training:
                    trained[case.timestamp] = train(training, cfg).weights
                else:
                    trained[case.timestamp] = _uniform_weights(cfg.sources)
            weights_list.append(trained[case.timestamp])
        case_weights[spec.name] = weights_list
        diagnostics["weights"][spec.name] = {
            s.value: weights_list[-1].get(s) for s in cfg.sources}

    kmax = max(ks)
    sums = {spec.name: {col: 0.0 for col in
                        (f"{m}@{k}" for m in _METRICS for k in ks)} for spec in specs}
    for index, (case, pools) in enumerate(zip(cases, pools_by_case)):
        for spec in specs:
            if spec.hybrid:
                if spec.name in global_weights:
                    weights = global_weights[spec.name]
                else:
                    weights = case_weights[spec.name][index]
                pool = hybrid_score({s: pools[s] for s in spec.sources}, weights)
            else:
                pool = pools[spec.sources[0]]
            if not len(pool):
                raise EmptyResultError(
                    f"empty candidate pool for user {case.user} at t={case.timestamp}")
            ranking = rank_top_k(pool, kmax)
            row = sums[spec.name]
            for k in ks:
                row[f"ndcg@{k}"] += ndcg_at_k(ranking, case.positives, k)
                row[f"rec@{k}"] += recall_at_k(ranking, case.positives, k)
                row[f"prec@{k}"] += precision_at_k(ranking, case.positives, k)

    n = len(cases)
    values = {name: {col: total / n for col, total in row.items()}
              for name, row in sums.items()}
    return EvalReport(
        methods=tuple(spec.name for spec in specs),
        ks=ks,
        values=values,
        cases=n,
        diagnostics=diagnostics,
    )


def recommend(
    catalog: Catalog,
    stores: Mapping[Source, FeatureStore],
    user: str,
    t: int | None = None,
    method: str = "Hyb(DNN+EVF+Metadata)",
    k: int = 10,
    agg: Aggregation = Aggregation.MAX,
    bpr: BprConfig | None = None,
    weights: HybridWeights | None = None,
    standardize_scores: bool = True,
) -> list[tuple[str, float]]:
    """Rank the currently unsold items for one user.

    With t omitted, 'now' means after the last recorded transaction.  For
    hybrid methods the fusion weights are taken from `weights` or trained on
    the replay cases strictly before t.
    """
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    spec = resolve_methods([method])[0]
    if bpr is None:
        bpr = BprConfig()
    if t is None:
        last = catalog.transactions[-1].timestamp if catalog.transactions else 0
        t = last + 1

    for source in spec.sources:
        if source not in stores:
            raise InputError(f"missing feature source: {source.value}")
    work_stores = {s: stores[s] for s in spec.sources}
    if Source.EVF in work_stores:
        work_stores[Source.EVF] = zscore_store(work_stores[Source.EVF])

    profile = profile_before(catalog, user, t)
    if not profile:
        raise EmptyResultError(f"user {user} has no purchases before t={t}")
    pool = sorted(available_items(catalog, t) - set(profile))
    if not pool:
        raise EmptyResultError(f"no items available at t={t}")
    # Reuse the replay scoring path; the positives field is not read here.
    probe = EvalCase(user, t, tuple(profile), frozenset(pool[:1]), tuple(pool))

    pools: dict[Source, ScoredPool] = {}
    for source in spec.sources:
        scored, _ = _case_source_pool(work_stores[source], probe, agg)
        if standardize_scores and len(scored):
            scored = standardize(scored)
        pools[source] = scored

    if not spec.hybrid:
        final = pools[spec.sources[0]]
    else:
        if weights is None:
            cfg = bpr.for_sources(spec.sources)
            history = [case for case in build_cases(catalog) if case.timestamp < t]
            if history:
                hist_pools = []
                for case in history:
                    per_source = {}
                    for source in spec.sources:
                        scored, _ = _case_source_pool(work_stores[source], case, agg)
                        if standardize_scores and len(scored):
                            scored = standardize(scored)
                        per_source[source] = scored
                    hist_pools.append(per_source)
                instances, _ = build_training_instances(history, hist_pools, cfg)
                weights = train(instances, cfg).weights if instances else _uniform_weights(cfg.sources)
            else:
                weights = _uniform_weights(cfg.sources)
        final = hybrid_score(pools, weights)
    if not len(final):
        raise EmptyResultError("no scorable items in the pool")
    top = rank_top_k(final, k)
    return [(item, final.score_of(item)) for item in top]
