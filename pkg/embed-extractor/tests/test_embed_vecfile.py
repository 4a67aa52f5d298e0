"""Output file format: header, ordering, exact round-trips."""

from __future__ import annotations

import numpy as np
import pytest

from embed_extractor import write_vectors


def test_header_sorted_rows_trailing_newline(tmp_path):
    path = tmp_path / "v.vec"
    write_vectors(path, 3, {"b2": np.array([1.0, 2.0, 3.0]),
                            "a1": np.array([4.0, 5.0, 6.0])})
    text = path.read_text(encoding="utf-8")
    assert text == "#dim 3\na1 4.0 5.0 6.0\nb2 1.0 2.0 3.0\n"


def test_values_round_trip_exactly(tmp_path):
    awkward = np.array([0.1, 1.0 / 3.0, 1e-17, 12345.678901234567, -2.5e300])
    path = tmp_path / "v.vec"
    write_vectors(path, 5, {"x": awkward})
    fields = path.read_text(encoding="utf-8").splitlines()[1].split()
    assert [float(f) for f in fields[1:]] == awkward.tolist()


def test_shape_mismatch_rejected(tmp_path):
    with pytest.raises(ValueError, match="shape"):
        write_vectors(tmp_path / "v.vec", 4, {"x": np.zeros(3)})


def test_write_is_byte_deterministic(tmp_path):
    vectors = {f"i{n}": np.linspace(0.0, float(n), 7) for n in range(5)}
    a, b = tmp_path / "a.vec", tmp_path / "b.vec"
    write_vectors(a, 7, vectors)
    write_vectors(b, 7, dict(reversed(list(vectors.items()))))
    assert a.read_bytes() == b.read_bytes()


def test_empty_mapping_writes_header_only(tmp_path):
    path = tmp_path / "v.vec"
    write_vectors(path, 4096, {})
    assert path.read_text(encoding="utf-8") == "#dim 4096\n"
