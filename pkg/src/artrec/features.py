"""Per-item feature vectors: deep embeddings, metadata multi-hot, EVF.

The three sources share one on-disk format: a `#dim D` header line followed
by one `item_id v1 ... vD` row per item, space separated, rows sorted by
item id, LF line endings.  Deep-embedding stores are L2-normalized at load
so cosine similarity reduces to a dot product.
"""

from __future__ import annotations

import enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .catalog import ATTRIBUTES, Catalog, ItemRecord
from .errors import InputError, ParseError


class Source(enum.Enum):
    """Where a feature vector comes from."""

    METADATA = "Metadata"
    DNN = "DNN"
    EVF = "EVF"


class FeatureStore:
    """Immutable map item id -> fixed-dimension vector for one source.

    Vectors are stacked into one matrix so scoring can gather candidate rows
    without per-item lookups; `norms` caches the row L2 norms.
    """

    def __init__(self, source: Source, ids: Iterable[str], matrix: np.ndarray):
        ids = tuple(ids)
        matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(ids):
            raise InputError(f"matrix shape {matrix.shape} does not match {len(ids)} ids")
        if matrix.shape[1] < 1:
            raise InputError("feature vectors must have dimension >= 1")
        if not np.isfinite(matrix).all():
            raise InputError("feature matrix contains non-finite values")
        if len(set(ids)) != len(ids):
            raise InputError("duplicate item ids in feature store")
        matrix.setflags(write=False)
        self.source = source
        self.ids = ids
        self.matrix = matrix
        self.index = {item: row for row, item in enumerate(ids)}
        self.norms = np.linalg.norm(matrix, axis=1)
        self.norms.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.index

    def __getitem__(self, item_id: str) -> np.ndarray:
        try:
            return self.matrix[self.index[item_id]]
        except KeyError:
            raise KeyError(f"no vector for item {item_id!r} in {self.source.value} store") from None

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        for item_id in self.ids:
            yield item_id, self.matrix[self.index[item_id]]


def load_vectors(file: str | Path, source: Source, expected_dim: int | None = None) -> FeatureStore:
    """Parse a feature vector file; DNN vectors are L2-normalized at load."""
    path = Path(file)
    ids: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2 or parts[0] != "#dim":
            raise ParseError(path, 1, f"expected '#dim <D>' header, got {header.rstrip()!r}")
        try:
            dim = int(parts[1])
        except ValueError:
            raise ParseError(path, 1, f"bad dimension: {parts[1]!r}") from None
        if dim < 1:
            raise ParseError(path, 1, f"dimension must be >= 1, got {dim}")
        if expected_dim is not None and dim != expected_dim:
            raise ParseError(path, 1, f"dimension mismatch: got {dim}, expected {expected_dim}")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.split()
            item_id = fields[0]
            if item_id in seen:
                raise ParseError(path, lineno, f"duplicate item id: {item_id}")
            seen.add(item_id)
            if len(fields) - 1 != dim:
                raise ParseError(path, lineno, f"dimension mismatch: got {len(fields) - 1} values, expected {dim}")
            try:
                vec = np.array([float(f) for f in fields[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(path, lineno, f"bad value: {exc}") from None
            if not np.isfinite(vec).all():
                raise ParseError(path, lineno, f"non-finite value in row for {item_id}")
            if source is Source.DNN:
                norm = float(np.linalg.norm(vec))
                if norm == 0.0:
                    raise ParseError(path, lineno, f"zero vector cannot be normalized: {item_id}")
                vec = vec / norm
            ids.append(item_id)
            rows.append(vec)
    if not rows:
        matrix = np.zeros((0, dim), dtype=np.float64)
    else:
        matrix = np.vstack(rows)
    order = sorted(range(len(ids)), key=lambda i: ids[i])
    return FeatureStore(source, [ids[i] for i in order], matrix[order] if len(rows) else matrix)


def write_vectors(path: str | Path, dimension: int, vectors: Mapping[str, np.ndarray]) -> None:
    """Write vectors in the canonical file format (sorted, LF, round-trip safe)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#dim {dimension}\n")
        for item_id in sorted(vectors):
            vec = np.asarray(vectors[item_id], dtype=np.float64)
            if vec.shape != (dimension,):
                raise InputError(f"vector for {item_id} has shape {vec.shape}, expected ({dimension},)")
            fh.write(item_id)
            for v in vec:
                fh.write(" " + repr(float(v)))
            fh.write("\n")


def write_store(store: FeatureStore, path: str | Path) -> None:
    write_vectors(path, store.dimension, dict(store.items()))


class Vocabulary:
    """Sorted distinct token list of one metadata attribute."""

    def __init__(self, attribute: str, values: Iterable[str]):
        if attribute not in ATTRIBUTES:
            raise InputError(f"unknown attribute: {attribute}")
        self.attribute = attribute
        self.values = tuple(sorted(set(values)))
        self.index = {tok: i for i, tok in enumerate(self.values)}

    def __len__(self) -> int:
        return len(self.values)


def build_vocabularies(catalog: Catalog) -> list[Vocabulary]:
    """One vocabulary per attribute, covering every token observed in the catalog."""
    observed: dict[str, set[str]] = {attr: set() for attr in ATTRIBUTES}
    for rec in catalog.items.values():
        for attr in ATTRIBUTES:
            observed[attr].update(rec.tokens(attr))
    return [Vocabulary(attr, observed[attr]) for attr in ATTRIBUTES]


def encode_metadata(item: ItemRecord, vocabs: list[Vocabulary]) -> np.ndarray:
    """Concatenated multi-hot blocks in fixed attribute order."""
    if [v.attribute for v in vocabs] != list(ATTRIBUTES):
        raise InputError("vocabularies must be given in canonical attribute order")
    blocks = []
    for vocab in vocabs:
        block = np.zeros(len(vocab), dtype=np.float64)
        for token in item.tokens(vocab.attribute):
            try:
                block[vocab.index[token]] = 1.0
            except KeyError:
                raise InputError(f"unknown token {token!r} for attribute {vocab.attribute}") from None
        blocks.append(block)
    return np.concatenate(blocks) if blocks else np.zeros(0)


def metadata_store(catalog: Catalog, vocabs: list[Vocabulary] | None = None) -> FeatureStore:
    """Encode every catalog item into a Metadata feature store."""
    if vocabs is None:
        vocabs = build_vocabularies(catalog)
    dim = sum(len(v) for v in vocabs)
    if dim == 0:
        raise InputError("catalog has no metadata tokens; cannot build a Metadata store")
    ids = sorted(catalog.items)
    matrix = np.vstack([encode_metadata(catalog.items[i], vocabs) for i in ids])
    return FeatureStore(Source.METADATA, ids, matrix)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity clamped to [-1, 1]; all-zero input yields 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return min(max(float(np.dot(a, b)) / (na * nb), -1.0), 1.0)
