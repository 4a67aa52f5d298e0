from __future__ import annotations

import numpy as np
import pytest

from artrec.catalog import Catalog, ItemRecord, Transaction
from artrec.features import metadata_store, Source
from artrec.synth import SynthConfig, generate


def make_item(item_id: str, **attrs) -> ItemRecord:
    """ItemRecord with attribute sets given as iterables of tokens."""
    sets = {name: frozenset(values) for name, values in attrs.items()}
    return ItemRecord(id=item_id, **sets)


def make_catalog(item_ids, purchases) -> Catalog:
    """Catalog from item ids (or ItemRecords) and (user, timestamp, items) triples."""
    records = [i if isinstance(i, ItemRecord) else ItemRecord(id=i) for i in item_ids]
    txs = tuple(Transaction(user=u, timestamp=t, items=tuple(its))
                for u, t, its in purchases)
    return Catalog(items={r.id: r for r in records}, transactions=txs)


SMALL_SYNTH = SynthConfig(n_users=24, n_items=120, n_clusters=4,
                          embedding_dim=16, purchases_per_user=(2, 3), seed=11)

NOISELESS_SYNTH = SynthConfig(n_users=4, n_items=40, n_clusters=4,
                              embedding_dim=16, noise_sigma=0.0,
                              purchases_per_user=(3, 3),
                              metadata_fidelity=1.0, seed=5)


@pytest.fixture(scope="session")
def small_synth():
    """A modest planted-cluster dataset shared across tests."""
    return generate(SMALL_SYNTH)


@pytest.fixture(scope="session")
def small_stores(small_synth):
    return {
        Source.METADATA: metadata_store(small_synth.catalog),
        Source.DNN: small_synth.dnn,
        Source.EVF: small_synth.evf,
    }


@pytest.fixture(scope="session")
def noiseless_synth():
    """Zero noise, perfect metadata: in-cluster similarity is exactly 1."""
    return generate(NOISELESS_SYNTH)


def random_image(rng: np.random.Generator, height: int = 17, width: int = 23) -> np.ndarray:
    return rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
