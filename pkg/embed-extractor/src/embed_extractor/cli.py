"""Command-line surface: one command that embeds an image directory.

Exit codes: 0 success, 1 completed with skipped or dropped images (or I/O
failure), 2 invalid input or model unavailable.
"""

from __future__ import annotations

import argparse
import sys

from .extractor import (LAYER_SLICES, InputError, ModelUnavailableError,
                        extract_embeddings)

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-extractor",
        description="Write 4096-d penultimate-layer CNN activations for a "
                    "directory of <item_id>.<ext> images.")
    parser.add_argument("--images", required=True, help="directory of images to embed")
    parser.add_argument("--out", required=True, help="output feature vector file")
    parser.add_argument("--batch-size", type=int, default=16,
                        help="images per inference batch (default 16)")
    parser.add_argument("--layer", choices=sorted(LAYER_SLICES), default="fc7",
                        help="which 4096-d fully-connected activation to emit (default fc7)")
    parser.add_argument("--model", default=None,
                        help="local state_dict checkpoint; default: torchvision model zoo")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = extract_embeddings(args.images, args.out, args.batch_size,
                                    layer=args.layer, model_path=args.model)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ModelUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{report.written} vectors -> {args.out}")
    if report.skipped or report.dropped:
        return EXIT_IO
    return EXIT_OK


def entry() -> None:
    sys.exit(main())
