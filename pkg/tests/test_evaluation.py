from __future__ import annotations

import math

import numpy as np
import pytest

from artrec.errors import EmptyResultError, InputError
from artrec.evaluation import (CANONICAL_METHODS, EvalCase, build_cases,
                               evaluate, ndcg_at_k, precision_at_k,
                               recall_at_k, recommend, resolve_methods)
from artrec.features import FeatureStore, Source, metadata_store
from artrec.hybrid import BprConfig, HybridWeights

from .conftest import make_catalog


class TestEvalCase:
    def test_validation(self):
        ok = EvalCase("u", 5, ("p",), frozenset({"a"}), ("a", "b"))
        assert ok.pool == ("a", "b")
        with pytest.raises(InputError):
            EvalCase("u", 5, (), frozenset({"a"}), ("a",))
        with pytest.raises(InputError):
            EvalCase("u", 5, ("p",), frozenset(), ("a",))
        with pytest.raises(InputError):
            EvalCase("u", 5, ("p",), frozenset({"a"}), ("b", "a"))
        with pytest.raises(InputError):
            EvalCase("u", 5, ("p",), frozenset({"z"}), ("a", "b"))
        with pytest.raises(InputError):
            EvalCase("u", 5, ("a",), frozenset({"a"}), ("a", "b"))


class TestBuildCases:
    def test_example_replay(self):
        catalog = make_catalog(
            ["a", "b", "c", "d", "e"],
            [("u1", 1, ("a",)), ("u2", 1, ("b",)),
             ("u1", 3, ("c",)), ("u2", 3, ("d",))])
        cases = build_cases(catalog)
        assert [(c.user, c.timestamp) for c in cases] == [("u1", 3), ("u2", 3)]
        first, second = cases
        assert first.profile == ("a",) and first.positives == {"c"}
        # same-timestamp sales stay visible to each other's pools
        assert first.pool == ("c", "d", "e")
        assert second.profile == ("b",) and second.pool == ("c", "d", "e")

    def test_first_purchases_yield_no_case(self):
        catalog = make_catalog(["a", "b"], [("u1", 1, ("a",)), ("u2", 2, ("b",))])
        assert build_cases(catalog) == []

    def test_multi_item_transaction_is_one_case(self):
        catalog = make_catalog(["a", "b", "c", "d"],
                               [("u1", 1, ("a",)), ("u1", 2, ("b", "c"))])
        cases = build_cases(catalog)
        assert len(cases) == 1
        assert cases[0].positives == {"b", "c"}

    def test_matches_brute_force_replay(self, small_synth):
        catalog = small_synth.catalog
        got = [(c.user, c.timestamp, c.positives, c.pool) for c in build_cases(catalog)]
        want = []
        for tx in catalog.transactions:
            profile = [i for other in catalog.transactions
                       if other.user == tx.user and other.timestamp < tx.timestamp
                       for i in other.items]
            if not profile:
                continue
            sold = {i for other in catalog.transactions
                    if other.timestamp < tx.timestamp for i in other.items}
            pool = tuple(sorted(set(catalog.items) - sold - set(profile)))
            want.append((tx.user, tx.timestamp, frozenset(tx.items), pool))
        assert got == want

    def test_case_invariants(self, small_synth):
        last_t = 0
        for case in build_cases(small_synth.catalog):
            assert case.timestamp >= last_t
            last_t = case.timestamp
            assert case.positives <= set(case.pool)
            assert not set(case.pool) & set(case.profile)


class TestMetrics:
    def test_examples(self):
        ranking = ["a", "x", "b", "c", "y", "d"]
        positives = {"x", "y", "z", "w"}
        assert precision_at_k(ranking, positives, 5) == pytest.approx(0.4, abs=1e-12)
        assert recall_at_k(ranking, positives, 5) == pytest.approx(0.5, abs=1e-12)
        assert ndcg_at_k(["a", "x"], {"x"}, 5) == pytest.approx(
            1.0 / math.log2(3.0), abs=1e-12)

    def test_perfect_and_empty_rankings(self):
        assert ndcg_at_k(["a", "b", "c"], {"a", "b"}, 5) == pytest.approx(1.0, abs=1e-12)
        assert recall_at_k(["a", "b"], {"a", "b"}, 2) == 1.0
        assert precision_at_k([], {"a"}, 5) == 0.0
        assert ndcg_at_k(["x", "y"], {"a"}, 5) == 0.0

    def test_short_ranking_keeps_k_denominator(self):
        # 1 hit in a 2-long ranking still divides by k = 5
        assert precision_at_k(["a", "x"], {"a"}, 5) == pytest.approx(0.2, abs=1e-12)

    def test_validation(self):
        with pytest.raises(InputError):
            precision_at_k(["a"], {"a"}, 0)
        with pytest.raises(InputError):
            recall_at_k(["a"], set(), 5)
        with pytest.raises(InputError):
            ndcg_at_k(["a"], set(), 5)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(51)
        items = [f"i{n:03d}" for n in range(50)]
        for _ in range(200):
            ranking = list(rng.permutation(items))
            positives = set(rng.choice(items, size=int(rng.integers(1, 6)), replace=False))
            for k in (5, 10):
                top = ranking[:k]
                hits = [r for r, item in enumerate(top, start=1) if item in positives]
                dcg = sum(1.0 / math.log2(r + 1) for r in hits)
                idcg = sum(1.0 / math.log2(r + 1)
                           for r in range(1, min(len(positives), k) + 1))
                assert precision_at_k(ranking, positives, k) == pytest.approx(
                    len(hits) / k, abs=1e-12)
                assert recall_at_k(ranking, positives, k) == pytest.approx(
                    len(hits) / len(positives), abs=1e-12)
                assert ndcg_at_k(ranking, positives, k) == pytest.approx(
                    dcg / idcg, abs=1e-12)


class TestMethodResolution:
    def test_canonical_names(self):
        assert CANONICAL_METHODS == ("Metadata", "DNN", "EVF",
                                     "Hyb(DNN+EVF)", "Hyb(DNN+EVF+Metadata)")
        specs = resolve_methods(["DNN", "Hyb(DNN+EVF)"])
        assert [s.name for s in specs] == ["DNN", "Hyb(DNN+EVF)"]
        assert specs[1].hybrid and not specs[0].hybrid

    def test_unknown_and_duplicate_rejected(self):
        with pytest.raises(InputError):
            resolve_methods(["CNN"])
        with pytest.raises(InputError):
            resolve_methods(["DNN", "DNN"])
        with pytest.raises(InputError):
            resolve_methods([])


def single_case_setup():
    """One replay case whose five positives are the closest DNN neighbours."""
    items = ["a0"] + [f"p{n}" for n in range(5)] + [f"q{n}" for n in range(9)]
    catalog = make_catalog(items, [
        ("u1", 1, ("a0",)),
        ("u1", 2, tuple(f"p{n}" for n in range(5))),
    ])
    vectors = {"a0": [1.0, 0.0]}
    for n in range(5):
        vectors[f"p{n}"] = [1.0, 0.01 * (n + 1)]
    for n in range(9):
        vectors[f"q{n}"] = [-0.2 * (n + 1), 1.0]
    ids = sorted(vectors)
    store = FeatureStore(Source.DNN, ids, np.array([vectors[i] for i in ids]))
    return catalog, {Source.DNN: store}


class TestEvaluate:
    def test_single_case_perfect_method(self):
        catalog, stores = single_case_setup()
        report = evaluate(catalog, stores, methods=["DNN"])
        assert report.cases == 1
        row = report.values["DNN"]
        assert row["prec@5"] == pytest.approx(1.0, abs=1e-12)
        assert row["rec@5"] == pytest.approx(1.0, abs=1e-12)
        assert row["ndcg@5"] == pytest.approx(1.0, abs=1e-12)
        assert row["prec@10"] == pytest.approx(0.5, abs=1e-12)
        assert row["rec@10"] == pytest.approx(1.0, abs=1e-12)
        assert row["ndcg@10"] == pytest.approx(1.0, abs=1e-12)

    def test_all_methods_share_case_count(self, small_synth, small_stores):
        report = evaluate(small_synth.catalog, small_stores)
        assert report.methods == CANONICAL_METHODS
        assert report.cases == len(build_cases(small_synth.catalog))
        for method in report.methods:
            assert set(report.values[method]) == {
                f"{m}@{k}" for m in ("ndcg", "rec", "prec") for k in (5, 10)}
            for value in report.values[method].values():
                assert 0.0 <= value <= 1.0

    def test_repeat_runs_identical(self, small_synth, small_stores):
        a = evaluate(small_synth.catalog, small_stores)
        b = evaluate(small_synth.catalog, small_stores)
        assert a.to_csv() == b.to_csv()
        assert a.values == b.values

    def test_jobs_do_not_change_results(self, small_synth, small_stores):
        a = evaluate(small_synth.catalog, small_stores)
        b = evaluate(small_synth.catalog, small_stores, jobs=3)
        assert a.to_csv() == b.to_csv()
        assert a.diagnostics["weights"] == b.diagnostics["weights"]

    def test_fixed_unit_weight_matches_single_source(self, small_synth, small_stores):
        fixed = {"Hyb(DNN+EVF)": HybridWeights({Source.DNN: 1.0})}
        report = evaluate(small_synth.catalog, small_stores,
                          methods=["DNN", "Hyb(DNN+EVF)"], fixed_weights=fixed)
        for col, value in report.values["DNN"].items():
            assert report.values["Hyb(DNN+EVF)"][col] == pytest.approx(value, abs=1e-12)

    def test_temporal_weights_mode(self, small_synth, small_stores):
        report = evaluate(small_synth.catalog, small_stores,
                          methods=["DNN", "Hyb(DNN+EVF)"], temporal_weights=True,
                          bpr=BprConfig(epochs=5))
        assert report.diagnostics["mode"] == "temporal"
        assert report.diagnostics["temporal_fallbacks"] >= 1
        assert report.cases == len(build_cases(small_synth.catalog))
        assert "strictly earlier" in report.to_text()

    def test_non_default_cutoffs(self):
        catalog, stores = single_case_setup()
        report = evaluate(catalog, stores, methods=["DNN"], ks=(3,))
        assert set(report.values["DNN"]) == {"ndcg@3", "rec@3", "prec@3"}
        assert report.values["DNN"]["prec@3"] == pytest.approx(1.0, abs=1e-12)

    def test_validation(self, small_synth, small_stores):
        with pytest.raises(InputError):
            evaluate(small_synth.catalog, small_stores, ks=())
        with pytest.raises(InputError):
            evaluate(small_synth.catalog, small_stores, ks=(0,))
        with pytest.raises(InputError):
            evaluate(small_synth.catalog, small_stores, jobs=0)
        with pytest.raises(InputError):
            evaluate(small_synth.catalog, {}, methods=["DNN"])

    def test_catalog_without_cases_rejected(self):
        catalog = make_catalog(["a", "b"], [("u1", 1, ("a",))])
        store = FeatureStore(Source.DNN, ("a", "b"), np.eye(2))
        with pytest.raises(EmptyResultError):
            evaluate(catalog, {Source.DNN: store}, methods=["DNN"])

    def test_missing_vector_diagnostics(self):
        catalog = make_catalog(["a", "b", "c", "d"],
                               [("u1", 1, ("a",)), ("u1", 2, ("b",))])
        # no vector for the profile item a, nor for pool item d
        store = FeatureStore(Source.DNN, ("b", "c"), np.eye(2))
        report = evaluate(catalog, {Source.DNN: store}, methods=["DNN"])
        assert report.diagnostics["unscored_profiles"] == 1
        assert report.diagnostics["skipped"]["DNN"] == 1
        text = report.to_text()
        assert "skipped" in text and "scored 0" in text


class TestReportFormat:
    def test_csv_layout(self, small_synth, small_stores):
        report = evaluate(small_synth.catalog, small_stores)
        lines = report.to_csv().splitlines()
        assert lines[0] == "method,ndcg@5,ndcg@10,rec@5,rec@10,prec@5,prec@10,cases"
        assert len(lines) == 1 + len(CANONICAL_METHODS)
        for line in lines[1:]:
            name, *cells = line.split(",")
            assert name in CANONICAL_METHODS
            assert cells[-1] == str(report.cases)
            for cell in cells[:-1]:
                whole, frac = cell.split(".")
                assert len(frac) == 6
        assert report.to_csv().endswith("\n")

    def test_text_report_mentions_global_weight_reuse(self, small_synth, small_stores):
        report = evaluate(small_synth.catalog, small_stores,
                          methods=["DNN", "Hyb(DNN+EVF)"])
        text = report.to_text()
        assert "Hyb(DNN+EVF)" in text
        assert "contribute to their own weights" in text


class TestRecommend:
    def catalog_and_stores(self):
        items = ["a", "b", "c", "d", "e", "f"]
        catalog = make_catalog(items, [("u1", 1, ("a",)), ("u2", 2, ("b",))])
        vectors = {"a": [1.0, 0.0], "b": [0.0, 1.0], "c": [0.9, 0.1],
                   "d": [0.5, 0.5], "e": [0.1, 0.9], "f": [-1.0, 0.2]}
        ids = sorted(vectors)
        matrix = np.array([vectors[i] for i in ids])
        return catalog, {Source.DNN: FeatureStore(Source.DNN, ids, matrix),
                         Source.EVF: FeatureStore(Source.EVF, ids, matrix + 2.0)}

    def test_excludes_profile_and_sold(self):
        catalog, stores = self.catalog_and_stores()
        got = recommend(catalog, stores, "u1", method="DNN", k=10)
        items = [item for item, _ in got]
        assert set(items) == {"c", "d", "e", "f"}
        assert items[0] == "c"
        scores = [score for _, score in got]
        assert scores == sorted(scores, reverse=True)

    def test_explicit_timestamp_restores_availability(self):
        catalog, stores = self.catalog_and_stores()
        items = [item for item, _ in recommend(catalog, stores, "u1", t=2, method="DNN")]
        # at t=2 item b is not yet sold
        assert "b" in items

    def test_k_truncates(self):
        catalog, stores = self.catalog_and_stores()
        assert len(recommend(catalog, stores, "u1", method="DNN", k=2)) == 2

    def test_hybrid_with_unit_weights_matches_source(self):
        catalog, stores = self.catalog_and_stores()
        alone = recommend(catalog, stores, "u1", method="DNN", k=4)
        fused = recommend(catalog, stores, "u1", method="Hyb(DNN+EVF)", k=4,
                          weights=HybridWeights({Source.DNN: 1.0}))
        assert [i for i, _ in alone] == [i for i, _ in fused]
        for (_, a), (_, b) in zip(alone, fused):
            assert b == pytest.approx(a, abs=1e-12)

    def test_trained_hybrid_runs(self, small_synth, small_stores):
        user = small_synth.catalog.transactions[-1].user
        got = recommend(small_synth.catalog, small_stores, user,
                        method="Hyb(DNN+EVF+Metadata)", k=5,
                        bpr=BprConfig(epochs=3))
        assert len(got) == 5

    def test_validation(self):
        catalog, stores = self.catalog_and_stores()
        with pytest.raises(InputError):
            recommend(catalog, stores, "u1", k=0)
        with pytest.raises(InputError):
            recommend(catalog, stores, "u1", method="CNN")
        with pytest.raises(InputError):
            recommend(catalog, stores, "ghost", method="DNN")
        with pytest.raises(EmptyResultError):
            recommend(catalog, stores, "u1", t=1, method="DNN")
