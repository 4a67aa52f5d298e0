"""Shared fixtures: a seeded local checkpoint and small image directories."""

from __future__ import annotations

import numpy as np
import pytest
import torch
from PIL import Image
from torchvision.models import alexnet

from embed_extractor import load_model


@pytest.fixture(scope="session")
def model_file(tmp_path_factory):
    """A deterministic local checkpoint standing in for zoo weights."""
    torch.manual_seed(0)
    path = tmp_path_factory.mktemp("model") / "alexnet_seeded.pt"
    torch.save(alexnet(weights=None).state_dict(), path)
    return path


@pytest.fixture(scope="session")
def model(model_file):
    return load_model(model_file)


@pytest.fixture(scope="session")
def make_images(tmp_path_factory):
    """Factory: a fresh directory of random RGB images under the given names."""

    def build(names, seed=3, size=(47, 31)):
        out = tmp_path_factory.mktemp("images")
        rng = np.random.default_rng(seed)
        for name in names:
            arr = rng.integers(0, 256, size=(size[1], size[0], 3), dtype=np.uint8)
            Image.fromarray(arr).save(out / name)
        return out

    return build


@pytest.fixture(scope="session")
def images_dir(make_images):
    """Ten images: nine distinct (mixed formats) plus one byte-for-byte copy."""
    names = [f"art{n:02d}.jpg" if n % 3 == 0 else f"art{n:02d}.png" for n in range(9)]
    out = make_images(names)
    (out / "dup01.png").write_bytes((out / "art01.png").read_bytes())
    return out
