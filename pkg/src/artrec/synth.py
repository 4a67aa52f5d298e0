"""Synthetic catalog generator with planted taste structure.

Items belong to hidden clusters; a cluster determines an embedding
prototype, a visual-feature prototype, and a metadata palette.  Each user
prefers one cluster and buys inside it while stock lasts, so a recommender
that reads any of the three feature sources should beat random ranking by a
wide margin.  Everything is driven by one seeded generator: the same config
always produces byte-identical output files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import ATTRIBUTES, Catalog, ItemRecord, Transaction, write_metadata_csv, write_transactions_csv
from .errors import InputError
from .evf import EVF_DIMENSION
from .features import FeatureStore, Source, write_store


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 1400
    n_items: int = 3500
    n_clusters: int = 10
    embedding_dim: int = 64
    noise_sigma: float = 0.05
    purchases_per_user: tuple[int, int] = (2, 2)  # inclusive range
    metadata_fidelity: float = 0.9  # chance a token matches the item's cluster
    seed: int = 42

    def __post_init__(self):
        if self.n_users < 1:
            raise InputError(f"n_users must be >= 1, got {self.n_users}")
        if self.n_items < 1:
            raise InputError(f"n_items must be >= 1, got {self.n_items}")
        if not 1 <= self.n_clusters <= self.n_items:
            raise InputError(f"n_clusters must be in [1, n_items], got {self.n_clusters}")
        if self.embedding_dim < 1:
            raise InputError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if self.noise_sigma < 0:
            raise InputError(f"noise_sigma must be non-negative, got {self.noise_sigma}")
        lo, hi = self.purchases_per_user
        if not 1 <= lo <= hi:
            raise InputError(f"purchases_per_user must satisfy 1 <= lo <= hi, got {self.purchases_per_user}")
        if not 0.0 <= self.metadata_fidelity <= 1.0:
            raise InputError(f"metadata_fidelity must be in [0, 1], got {self.metadata_fidelity}")
        if self.metadata_fidelity < 1.0 and self.n_clusters < 2:
            raise InputError("metadata_fidelity < 1 needs at least 2 clusters to draw a wrong token from")
        if not 0 <= self.seed < 2 ** 64:
            raise InputError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "purchases_per_user", (int(lo), int(hi)))


@dataclass(frozen=True)
class SynthResult:
    """Generated dataset plus the planted assignments tests can check against."""

    catalog: Catalog
    dnn: FeatureStore
    evf: FeatureStore
    item_cluster: dict[str, int]
    user_cluster: dict[str, int]


def _ids(prefix: str, count: int) -> list[str]:
    # Zero-padded so lexicographic order matches creation order.
    width = len(str(count - 1)) if count > 1 else 1
    return [f"{prefix}{i:0{width}d}" for i in range(count)]


def _unit_rows(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise InputError("degenerate zero-norm row while generating embeddings")
    return rows / norms


def generate(cfg: SynthConfig = SynthConfig()) -> SynthResult:
    """Build the catalog, both vector stores, and the planted ground truth."""
    rng = np.random.default_rng(cfg.seed)
    item_ids = _ids("i", cfg.n_items)
    user_ids = _ids("u", cfg.n_users)
    item_cluster = {item: i % cfg.n_clusters for i, item in enumerate(item_ids)}
    user_cluster = {user: i % cfg.n_clusters for i, user in enumerate(user_ids)}

    centers = _unit_rows(rng.normal(size=(cfg.n_clusters, cfg.embedding_dim)))
    noise = rng.normal(scale=cfg.noise_sigma, size=(cfg.n_items, cfg.embedding_dim)) \
        if cfg.noise_sigma > 0 else np.zeros((cfg.n_items, cfg.embedding_dim))
    emb = _unit_rows(centers[[item_cluster[i] for i in item_ids]] + noise)

    evf_protos = rng.uniform(0.2, 0.8, size=(cfg.n_clusters, EVF_DIMENSION))
    evf_noise = rng.normal(scale=cfg.noise_sigma, size=(cfg.n_items, EVF_DIMENSION)) \
        if cfg.noise_sigma > 0 else np.zeros((cfg.n_items, EVF_DIMENSION))
    evf = np.clip(evf_protos[[item_cluster[i] for i in item_ids]] + evf_noise, 0.0, 1.0)

    items: dict[str, ItemRecord] = {}
    for idx, item in enumerate(item_ids):
        cluster = item_cluster[item]
        tokens = {}
        for attr in ATTRIBUTES:
            c = cluster
            if rng.random() >= cfg.metadata_fidelity:
                # Mislabel: any cluster but the true one.
                c = int((cluster + 1 + rng.integers(cfg.n_clusters - 1)) % cfg.n_clusters)
            tokens[attr] = frozenset({f"{attr}{c}"})
        items[item] = ItemRecord(id=item, **tokens)

    demand = rng.integers(cfg.purchases_per_user[0], cfg.purchases_per_user[1] + 1,
                          size=cfg.n_users)
    total_demand = int(demand.sum())
    if total_demand > cfg.n_items:
        raise InputError(
            f"not enough unsold items: {total_demand} purchases requested, {cfg.n_items} items")

    unsold_by_cluster: list[list[str]] = [[] for _ in range(cfg.n_clusters)]
    for item in item_ids:
        unsold_by_cluster[item_cluster[item]].append(item)

    transactions: list[Transaction] = []
    t = 1
    remaining = demand.copy()
    for _ in range(int(demand.max())):
        for u, user in enumerate(user_ids):
            if remaining[u] == 0:
                continue
            stock = unsold_by_cluster[user_cluster[user]]
            if not stock:
                # Preferred cluster sold out: fall back to anything unsold.
                fallback = [item for c in unsold_by_cluster for item in c]
                if not fallback:
                    raise InputError("not enough unsold items to satisfy demand")
                item = fallback[int(rng.integers(len(fallback)))]
                unsold_by_cluster[item_cluster[item]].remove(item)
            else:
                item = stock.pop(int(rng.integers(len(stock))))
            transactions.append(Transaction(user=user, timestamp=t, items=(item,)))
            t += 1
            remaining[u] -= 1

    catalog = Catalog(items=items, transactions=tuple(transactions))
    dnn_store = FeatureStore(Source.DNN, tuple(item_ids), emb)
    evf_store = FeatureStore(Source.EVF, tuple(item_ids), evf)
    return SynthResult(catalog, dnn_store, evf_store, item_cluster, user_cluster)


def write_dataset(result: SynthResult, out_dir: str | Path) -> dict[str, Path]:
    """Write metadata.csv, transactions.csv, dnn.vec and evf.vec into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "metadata": out / "metadata.csv",
        "transactions": out / "transactions.csv",
        "dnn": out / "dnn.vec",
        "evf": out / "evf.vec",
    }
    write_metadata_csv(result.catalog, paths["metadata"])
    write_transactions_csv(result.catalog, paths["transactions"])
    write_store(result.dnn, paths["dnn"])
    write_store(result.evf, paths["evf"])
    return paths
