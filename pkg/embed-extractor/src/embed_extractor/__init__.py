"""4096-d penultimate-layer CNN activations for image directories.

A thin batch extractor around a pretrained AlexNet: every image in a
directory becomes one raw (unnormalized) activation row in the shared
feature vector file format, keyed by filename stem and sorted, ready to be
loaded as a deep-embedding feature store.
"""

from .extractor import (EMBEDDING_DIM, IMAGE_SUFFIXES, LAYER_SLICES,
                        ExtractionReport, InputError, ModelUnavailableError,
                        activations, extract_embeddings, load_model,
                        preprocessing, scan_images)
from .vecfile import write_vectors

__version__ = "0.1.0"

__all__ = [
    "EMBEDDING_DIM", "ExtractionReport", "IMAGE_SUFFIXES", "InputError",
    "LAYER_SLICES", "ModelUnavailableError", "activations",
    "extract_embeddings", "load_model", "preprocessing", "scan_images",
    "write_vectors",
]
