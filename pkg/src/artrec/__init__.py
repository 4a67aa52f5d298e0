"""Content-based recommendation and offline evaluation for one-of-a-kind
artwork sales.

Items are unique: once sold they leave the pool, so recommendation works
from item content (curated metadata, neural embeddings, explicit visual
features) rather than collaborative filtering. The package covers the full
offline loop: feature extraction, per-source scoring, learned score fusion,
chronological replay evaluation, and synthetic dataset generation.
"""

from .catalog import (ATTRIBUTES, Catalog, ItemRecord, Transaction, available_items,
                      load_catalog, load_metadata_csv, load_transactions_csv,
                      profile_before, write_metadata_csv, write_transactions_csv)
from .errors import ArtrecError, EmptyResultError, InputError, ParseError
from .evaluation import (CANONICAL_METHODS, EvalCase, EvalReport, MethodSpec,
                         build_cases, evaluate, ndcg_at_k, precision_at_k,
                         recall_at_k, recommend, resolve_methods)
from .evf import (EVF_DIMENSION, EvfVector, RgbImage, extract_evf, load_image)
from .features import (FeatureStore, Source, Vocabulary, build_vocabularies, cosine,
                       encode_metadata, load_vectors, metadata_store, write_store,
                       write_vectors)
from .hybrid import (BprConfig, HybridWeights, TrainingInstance, bpr_gradient,
                     bpr_objective, build_training_instances, hybrid_score,
                     log_sigma, read_weights, sigma, train, write_weights)
from .scoring import (Aggregation, ScoredPool, rank_top_k, score_item, score_pool,
                      standardize, zscore_store)
from .synth import SynthConfig, SynthResult, generate, write_dataset

__version__ = "0.1.0"

__all__ = [
    "ATTRIBUTES", "Aggregation", "ArtrecError", "BprConfig", "CANONICAL_METHODS",
    "Catalog", "EVF_DIMENSION", "EmptyResultError", "EvalCase", "EvalReport",
    "EvfVector", "FeatureStore", "HybridWeights", "InputError", "ItemRecord",
    "MethodSpec", "ParseError", "RgbImage", "ScoredPool", "Source", "SynthConfig",
    "SynthResult", "TrainingInstance", "Transaction", "Vocabulary",
    "available_items", "bpr_gradient", "bpr_objective", "build_cases",
    "build_training_instances", "build_vocabularies", "cosine", "encode_metadata",
    "evaluate", "extract_evf", "generate", "hybrid_score", "load_catalog",
    "load_image", "load_metadata_csv", "load_transactions_csv", "load_vectors",
    "log_sigma", "metadata_store", "ndcg_at_k", "precision_at_k", "profile_before",
    "rank_top_k", "read_weights", "recall_at_k", "recommend", "resolve_methods",
    "score_item", "score_pool", "sigma", "standardize", "train", "write_dataset",
    "write_metadata_csv", "write_store", "write_transactions_csv", "write_vectors",
    "write_weights", "zscore_store",
]
