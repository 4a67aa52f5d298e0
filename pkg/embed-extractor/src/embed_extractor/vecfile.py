"""Writer for the shared feature vector file format.

One header line `#dim <D>`, then one `<item_id> <v1> <v2> ...` row per item,
sorted by id, floats in repr form so values round-trip exactly, LF endings,
trailing newline.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import numpy as np


def write_vectors(path: str | Path, dimension: int, vectors: Mapping[str, np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#dim {dimension}\n")
        for item_id in sorted(vectors):
            vec = np.asarray(vectors[item_id], dtype=np.float64)
            if vec.shape != (dimension,):
                raise ValueError(f"vector for {item_id} has shape {vec.shape}, expected ({dimension},)")
            fh.write(item_id)
            for v in vec:
                fh.write(" " + repr(float(v)))
            fh.write("\n")
