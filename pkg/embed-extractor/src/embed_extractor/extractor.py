"""Penultimate-layer activations of a pretrained AlexNet over an image directory.

Each image named `<item_id>.<ext>` becomes one 4096-d row: the post-ReLU
output of one of the two 4096-unit fully-connected layers ("fc7" by default,
"fc6" by flag), written raw (unnormalized) in the shared feature vector file
format. Inference runs batched on CPU in eval mode, so results are
deterministic for fixed weights.
"""

from __future__ import annotations

import hashlib
import pickle
import sys
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError
from torchvision import transforms
from torchvision.models import AlexNet_Weights, alexnet

from .vecfile import write_vectors

EMBEDDING_DIM = 4096
# Prefix of `model.classifier` ending at the ReLU whose output is the wanted
# 4096-d activation vector (dropout layers are identities in eval mode).
LAYER_SLICES = {"fc6": 3, "fc7": 6}
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp", ".tif", ".tiff"}

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


class InputError(ValueError):
    """Invalid directory, flag value, or image naming."""


class ModelUnavailableError(RuntimeError):
    """No usable model weights could be obtained."""


def load_model(path: str | Path | None = None) -> torch.nn.Module:
    """AlexNet in eval mode: zoo weights by default, or a local state_dict."""
    if path is not None:
        model = alexnet(weights=None)
        try:
            state = torch.load(Path(path), map_location="cpu", weights_only=True)
            model.load_state_dict(state)
        except (OSError, RuntimeError, ValueError, KeyError,
                pickle.UnpicklingError, zipfile.BadZipFile) as exc:
            raise ModelUnavailableError(f"cannot load model weights from {path}: {exc}") from None
    else:
        try:
            model = alexnet(weights=AlexNet_Weights.IMAGENET1K_V1)
        except Exception as exc:  # the zoo download fails in many shapes offline
            raise ModelUnavailableError(
                f"pretrained weights unavailable from the model zoo ({exc}); "
                "pass --model with a local checkpoint") from None
    model.eval()
    return model


def preprocessing() -> transforms.Compose:
    """The zoo's standard recipe: resize 256, center-crop 224, normalize."""
    return transforms.Compose([
        transforms.Resize(256),
        transforms.CenterCrop(224),
        transforms.ToTensor(),
        transforms.Normalize(IMAGENET_MEAN, IMAGENET_STD),
    ])


def activations(model: torch.nn.Module, batch: torch.Tensor, layer: str) -> torch.Tensor:
    """Post-ReLU activations of the requested fully-connected layer."""
    x = model.features(batch)
    x = model.avgpool(x)
    x = torch.flatten(x, 1)
    return model.classifier[: LAYER_SLICES[layer]](x)


def scan_images(images_dir: str | Path) -> list[Path]:
    """Image files in the directory, sorted; filename stems are the item ids."""
    images = Path(images_dir)
    if not images.is_dir():
        raise InputError(f"not a directory: {images}")
    files = sorted(p for p in images.iterdir()
                   if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    by_id: dict[str, Path] = {}
    for path in files:
        stem = path.stem
        if not stem or any(c.isspace() for c in stem) or "," in stem:
            raise InputError(f"bad item id {stem!r} from {path.name}: "
                             "must be non-empty, no whitespace, no commas")
        if stem in by_id:
            raise InputError(f"duplicate item id {stem!r}: {by_id[stem].name} and {path.name}")
        by_id[stem] = path
    return files


@dataclass(frozen=True)
class ExtractionReport:
    """Rows written plus everything that was left out, and why."""

    written: int
    skipped: tuple[str, ...]  # filenames that could not be decoded
    dropped: tuple[str, ...]  # item ids whose activations failed validation


def _warn_stderr(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def extract_embeddings(
    images_dir: str | Path,
    out_file: str | Path,
    batch_size: int = 16,
    *,
    layer: str = "fc7",
    model: torch.nn.Module | None = None,
    model_path: str | Path | None = None,
    warn: Callable[[str], None] = _warn_stderr,
) -> ExtractionReport:
    """Write one embedding row per decodable image, sorted by item id.

    Undecodable images are skipped with a warning; vectors that fail
    validation (all-zero or non-finite activations) are dropped with a
    warning. Identical pixel content is inferred once, so duplicate images
    always yield identical rows regardless of batching.
    """
    if layer not in LAYER_SLICES:
        raise InputError(f"unknown layer {layer!r}; valid: {', '.join(sorted(LAYER_SLICES))}")
    if batch_size < 1:
        raise InputError(f"batch size must be >= 1, got {batch_size}")
    files = scan_images(images_dir)

    prep = preprocessing()
    ids: list[str] = []
    inputs: list[torch.Tensor] = []
    skipped: list[str] = []
    for path in files:
        try:
            with Image.open(path) as img:
                rgb = img.convert("RGB")
        except (UnidentifiedImageError, OSError, ValueError) as exc:
            warn(f"skipping {path.name}: cannot decode image ({exc})")
            skipped.append(path.name)
            continue
        ids.append(path.stem)
        inputs.append(prep(rgb))

    matrix = np.zeros((0, EMBEDDING_DIM))
    row_of: list[int] = []
    if inputs:
        if model is None:
            model = load_model(model_path)
        unique: dict[bytes, int] = {}
        batch_inputs: list[torch.Tensor] = []
        for tensor in inputs:
            key = hashlib.sha256(tensor.numpy().tobytes()).digest()
            index = unique.get(key)
            if index is None:
                index = len(batch_inputs)
                unique[key] = index
                batch_inputs.append(tensor)
            row_of.append(index)
        outputs = []
        with torch.inference_mode():
            for start in range(0, len(batch_inputs), batch_size):
                batch = torch.stack(batch_inputs[start:start + batch_size])
                outputs.append(activations(model, batch, layer))
        matrix = torch.cat(outputs).double().numpy()

    vectors: dict[str, np.ndarray] = {}
    dropped: list[str] = []
    for item_id, index in zip(ids, row_of):
        vec = matrix[index]
        if not np.isfinite(vec).all():
            warn(f"dropping {item_id}: non-finite activations")
            dropped.append(item_id)
        elif float(np.linalg.norm(vec)) == 0.0:
            warn(f"dropping {item_id}: all activations are zero")
            dropped.append(item_id)
        else:
            vectors[item_id] = vec
    if not vectors:
        warn(f"no embeddings extracted from {images_dir}")
    write_vectors(out_file, EMBEDDING_DIM, vectors)
    return ExtractionReport(written=len(vectors), skipped=tuple(skipped), dropped=tuple(dropped))
