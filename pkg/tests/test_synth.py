from __future__ import annotations

import numpy as np
import pytest

from artrec.catalog import ATTRIBUTES, load_catalog
from artrec.errors import InputError
from artrec.evaluation import build_cases
from artrec.features import Source, load_vectors
from artrec.scoring import Aggregation, score_pool
from artrec.synth import SynthConfig, generate, write_dataset

from .conftest import NOISELESS_SYNTH, SMALL_SYNTH


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        {"n_users": 0}, {"n_items": 0}, {"n_clusters": 0},
        {"n_clusters": 200, "n_items": 100}, {"embedding_dim": 0},
        {"noise_sigma": -0.1}, {"purchases_per_user": (0, 2)},
        {"purchases_per_user": (3, 2)}, {"metadata_fidelity": -0.1},
        {"metadata_fidelity": 1.1}, {"metadata_fidelity": 0.5, "n_clusters": 1},
        {"seed": -1},
    ])
    def test_invalid_rejected(self, kwargs):
        base = {"n_users": 4, "n_items": 40, "n_clusters": 4, "embedding_dim": 8}
        base.update(kwargs)
        with pytest.raises(InputError):
            SynthConfig(**base)

    def test_defaults(self):
        cfg = SynthConfig()
        assert (cfg.n_users, cfg.n_items, cfg.n_clusters) == (1400, 3500, 10)
        assert cfg.purchases_per_user == (2, 2)


class TestGenerate:
    def test_shapes_and_ids(self, small_synth):
        catalog = small_synth.catalog
        assert len(catalog.items) == SMALL_SYNTH.n_items
        assert len(catalog.users) == SMALL_SYNTH.n_users
        assert small_synth.dnn.matrix.shape == (SMALL_SYNTH.n_items,
                                                SMALL_SYNTH.embedding_dim)
        assert small_synth.evf.matrix.shape == (SMALL_SYNTH.n_items, 7)
        assert sorted(catalog.items) == sorted(small_synth.dnn.ids)
        assert set(small_synth.item_cluster) == set(catalog.items)
        assert set(small_synth.user_cluster) == set(catalog.users)

    def test_demand_respected(self, small_synth):
        lo, hi = SMALL_SYNTH.purchases_per_user
        counts: dict[str, int] = {}
        for tx in small_synth.catalog.transactions:
            counts[tx.user] = counts.get(tx.user, 0) + len(tx.items)
        assert set(counts) == set(small_synth.catalog.users)
        assert all(lo <= n <= hi for n in counts.values())

    def test_timestamps_are_consecutive(self, small_synth):
        stamps = [tx.timestamp for tx in small_synth.catalog.transactions]
        assert stamps == list(range(1, len(stamps) + 1))

    def test_dnn_rows_unit_norm(self, small_synth):
        norms = np.linalg.norm(small_synth.dnn.matrix, axis=1)
        assert np.allclose(norms, 1.0, atol=1e-12)

    def test_evf_rows_in_unit_range(self, small_synth):
        assert small_synth.evf.matrix.min() >= 0.0
        assert small_synth.evf.matrix.max() <= 1.0

    def test_one_token_per_attribute(self, small_synth):
        for record in small_synth.catalog.items.values():
            for attr in ATTRIBUTES:
                tokens = record.tokens(attr)
                assert len(tokens) == 1
                assert next(iter(tokens)).startswith(attr)

    def test_deterministic(self):
        a = generate(SMALL_SYNTH)
        b = generate(SMALL_SYNTH)
        assert a.catalog.transactions == b.catalog.transactions
        assert a.catalog.items == b.catalog.items
        assert np.array_equal(a.dnn.matrix, b.dnn.matrix)
        assert np.array_equal(a.evf.matrix, b.evf.matrix)

    def test_seed_changes_output(self):
        a = generate(SMALL_SYNTH)
        b = generate(SynthConfig(**{**SMALL_SYNTH.__dict__, "seed": 12}))
        assert a.catalog.transactions != b.catalog.transactions

    def test_infeasible_demand_rejected(self):
        with pytest.raises(InputError):
            generate(SynthConfig(n_users=10, n_items=5, n_clusters=2,
                                 embedding_dim=4, purchases_per_user=(2, 2)))


class TestNoiselessInvariants:
    def test_vectors_equal_cluster_prototypes(self, noiseless_synth):
        clusters = noiseless_synth.item_cluster
        dnn_by_cluster: dict[int, np.ndarray] = {}
        evf_by_cluster: dict[int, np.ndarray] = {}
        for item_id, row in noiseless_synth.dnn.items():
            c = clusters[item_id]
            if c in dnn_by_cluster:
                assert np.array_equal(row, dnn_by_cluster[c])
            dnn_by_cluster[c] = row
        for item_id, row in noiseless_synth.evf.items():
            c = clusters[item_id]
            if c in evf_by_cluster:
                assert np.array_equal(row, evf_by_cluster[c])
            evf_by_cluster[c] = row
        assert len(dnn_by_cluster) == NOISELESS_SYNTH.n_clusters

    def test_perfect_fidelity_labels(self, noiseless_synth):
        for item_id, record in noiseless_synth.catalog.items.items():
            c = noiseless_synth.item_cluster[item_id]
            for attr in ATTRIBUTES:
                assert record.tokens(attr) == {f"{attr}{c}"}

    def test_purchases_stay_in_cluster(self, noiseless_synth):
        for tx in noiseless_synth.catalog.transactions:
            for item in tx.items:
                assert (noiseless_synth.item_cluster[item]
                        == noiseless_synth.user_cluster[tx.user])

    def test_dnn_ranks_own_cluster_first(self, noiseless_synth):
        catalog = noiseless_synth.catalog
        clusters = noiseless_synth.item_cluster
        for case in build_cases(catalog):
            pool = score_pool(catalog, noiseless_synth.dnn, case.user,
                              case.timestamp, Aggregation.MAX)
            own = noiseless_synth.user_cluster[case.user]
            in_cluster = [pool.score_of(i) for i in pool.ids if clusters[i] == own]
            cross = [pool.score_of(i) for i in pool.ids if clusters[i] != own]
            assert min(in_cluster) > max(cross)
            assert min(in_cluster) == pytest.approx(1.0, abs=1e-9)


class TestRoundTrip:
    def test_written_dataset_reloads(self, tmp_path, small_synth):
        paths = write_dataset(small_synth, tmp_path)
        catalog = load_catalog(paths["metadata"], paths["transactions"])
        assert catalog.items == small_synth.catalog.items
        assert catalog.transactions == small_synth.catalog.transactions
        dnn = load_vectors(paths["dnn"], Source.DNN)
        evf = load_vectors(paths["evf"], Source.EVF)
        assert dnn.ids == tuple(sorted(small_synth.dnn.ids))
        for item_id, row in evf.items():
            assert np.array_equal(row, small_synth.evf[item_id])
        for item_id, row in dnn.items():
            assert np.allclose(row, small_synth.dnn[item_id], atol=1e-12)

    def test_written_files_are_stable(self, tmp_path, small_synth):
        a = write_dataset(small_synth, tmp_path / "a")
        b = write_dataset(generate(SMALL_SYNTH), tmp_path / "b")
        for key in a:
            assert a[key].read_bytes() == b[key].read_bytes()
