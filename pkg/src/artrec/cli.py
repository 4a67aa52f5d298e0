"""Command-line surface: feature extraction, dataset synthesis, offline
evaluation, and per-user recommendation.

Exit codes: 0 success, 1 I/O failure, 2 invalid input or config, 3 empty
result (nothing to score or evaluate).
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .catalog import load_catalog
from .errors import EmptyResultError, InputError, ParseError
from .evaluation import CANONICAL_METHODS, evaluate, recommend, resolve_methods
from .evf import EVF_DIMENSION, extract_evf, load_image
from .features import Source, load_vectors, metadata_store, write_vectors
from .hybrid import BprConfig
from .scoring import Aggregation
from .synth import SynthConfig, generate, write_dataset

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2
EXIT_EMPTY = 3

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp", ".tif", ".tiff"}


def _require_file(path: Path) -> Path:
    if not path.is_file():
        raise InputError(f"missing input file: {path}")
    return path


def parse_flat_config(path: str | Path) -> dict[str, str]:
    """Parse `key = value` lines; `#` starts a comment, blanks are skipped."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            key, sep, value = stripped.partition("=")
            key = key.strip()
            value = value.strip()
            if not sep or not key:
                raise ParseError(path, lineno, f"expected 'key = value', got {stripped!r}")
            if key in out:
                raise ParseError(path, lineno, f"duplicate key: {key}")
            out[key] = value
    return out


def _synth_config(raw: dict[str, str]) -> SynthConfig:
    kwargs: dict[str, object] = {}
    int_keys = {"n_users", "n_items", "n_clusters", "embedding_dim", "seed"}
    float_keys = {"noise_sigma", "metadata_fidelity"}
    for key, value in raw.items():
        try:
            if key in int_keys:
                kwargs[key] = int(value)
            elif key in float_keys:
                kwargs[key] = float(value)
            elif key == "purchases_per_user":
                lo, _, hi = value.partition(",")
                kwargs[key] = (int(lo.strip()), int(hi.strip()))
            else:
                raise InputError(f"unknown config key: {key}")
        except ValueError:
            raise InputError(f"bad value for {key}: {value!r}") from None
    return SynthConfig(**kwargs)


def _parse_ks(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(part.strip()) for part in text.split(","))
    except ValueError:
        raise InputError(f"cutoff list must be comma-separated integers, got {text!r}") from None
    if not ks or any(k < 1 for k in ks):
        raise InputError(f"cutoffs must be positive, got {text!r}")
    if any(ks[i] >= ks[i + 1] for i in range(len(ks) - 1)):
        raise InputError(f"cutoffs must be strictly ascending, got {text!r}")
    return ks


def _bpr_config(args: argparse.Namespace) -> BprConfig:
    return BprConfig(
        learning_rate=args.learning_rate,
        regularization=args.regularization,
        epochs=args.epochs,
        negatives_per_positive=args.negatives_per_positive,
        seed=args.seed,
    )


def _load_stores(data: Path, sources: set[Source], catalog) -> dict[Source, object]:
    stores: dict[Source, object] = {}
    if Source.METADATA in sources:
        stores[Source.METADATA] = metadata_store(catalog)
    if Source.DNN in sources:
        stores[Source.DNN] = load_vectors(_require_file(data / "dnn.vec"), Source.DNN)
    if Source.EVF in sources:
        stores[Source.EVF] = load_vectors(_require_file(data / "evf.vec"), Source.EVF,
                                          expected_dim=EVF_DIMENSION)
    return stores


def _load_catalog_dir(data: Path):
    return load_catalog(_require_file(data / "metadata.csv"),
                        _require_file(data / "transactions.csv"))


def cmd_extract_evf(args: argparse.Namespace) -> int:
    images = Path(args.images)
    if not images.is_dir():
        raise InputError(f"--images must be an existing directory: {images}")
    if args.jobs < 1:
        raise InputError(f"--jobs must be >= 1, got {args.jobs}")
    files = sorted(p for p in images.iterdir()
                   if p.is_file() and p.suffix.lower() in _IMAGE_SUFFIXES)
    by_id: dict[str, Path] = {}
    for path in files:
        if path.stem in by_id:
            raise InputError(f"duplicate item id {path.stem!r}: {by_id[path.stem].name} and {path.name}")
        by_id[path.stem] = path

    def one(path: Path) -> np.ndarray | Exception:
        try:
            return extract_evf(load_image(path)).as_array()
        except InputError as exc:
            return exc

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(one, files))
    else:
        results = [one(path) for path in files]

    offenders = [(path, res) for path, res in zip(files, results) if isinstance(res, Exception)]
    if offenders:
        for path, exc in offenders:
            print(f"error: cannot extract features from {path.name}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    vectors = {path.stem: res for path, res in zip(files, results)}
    if not vectors:
        print(f"warning: no images found in {images}", file=sys.stderr)
    write_vectors(args.out, EVF_DIMENSION, vectors)
    print(f"{len(vectors)} vectors -> {args.out}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    raw = parse_flat_config(_require_file(Path(args.config))) if args.config else {}
    if args.seed is not None:
        raw["seed"] = str(args.seed)
    cfg = _synth_config(raw)
    result = generate(cfg)
    write_dataset(result, args.out)
    print(f"{cfg.n_items} items, {len(result.catalog.transactions)} transactions -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    if args.jobs < 1:
        raise InputError(f"--jobs must be >= 1, got {args.jobs}")
    methods = ([part.strip() for part in args.methods.split(",")]
               if args.methods else list(CANONICAL_METHODS))
    specs = resolve_methods(methods)
    ks = _parse_ks(args.k)
    data = Path(args.data)
    catalog = _load_catalog_dir(data)
    needed = {source for spec in specs for source in spec.sources}
    stores = _load_stores(data, needed, catalog)
    report = evaluate(
        catalog, stores, methods, ks,
        agg=Aggregation(args.agg),
        bpr=_bpr_config(args),
        temporal_weights=args.temporal_weights,
        standardize_scores=not args.no_standardize,
        jobs=args.jobs,
    )
    text = report.to_csv() if args.format == "csv" else report.to_text()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"report ({report.cases} cases) -> {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_recommend(args: argparse.Namespace) -> int:
    if args.k < 1:
        raise InputError(f"--k must be >= 1, got {args.k}")
    spec = resolve_methods([args.method])[0]
    data = Path(args.data)
    catalog = _load_catalog_dir(data)
    stores = _load_stores(data, set(spec.sources), catalog)
    ranked = recommend(
        catalog, stores, args.user, t=args.at,
        method=args.method, k=args.k,
        agg=Aggregation(args.agg),
        bpr=_bpr_config(args),
    )
    for item, score in ranked:
        print(f"{item} {score:.6f}")
    return EXIT_OK


def _add_bpr_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=42, help="RNG seed (default 42)")
    parser.add_argument("--learning-rate", type=float, default=0.05,
                        help="fusion trainer step size (default 0.05)")
    parser.add_argument("--regularization", type=float, default=1e-4,
                        help="fusion trainer L2 penalty (default 1e-4)")
    parser.add_argument("--epochs", type=int, default=200,
                        help="fusion trainer passes over the pairs (default 200)")
    parser.add_argument("--negatives-per-positive", type=int, default=5,
                        help="sampled non-purchases per purchase (default 5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="artrec",
        description="Content-based artwork recommendation and offline evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-evf", help="compute 7-dim visual feature vectors for a directory of images")
    p.add_argument("--images", required=True, help="directory of <item_id>.<ext> images")
    p.add_argument("--out", required=True, help="output vector file")
    p.add_argument("--jobs", type=int, default=1, help="parallel image decodes (default 1)")
    p.set_defaults(func=cmd_extract_evf)

    p = sub.add_parser("synth", help="generate a synthetic dataset with planted taste clusters")
    p.add_argument("--config", help="flat 'key = value' config file (defaults used when omitted)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("evaluate", help="replay past sales and report ranking metrics per method")
    p.add_argument("--data", required=True,
                   help="directory with metadata.csv, transactions.csv and the needed .vec files")
    p.add_argument("--methods", default=None,
                   help="comma-separated method names (default: all five)")
    p.add_argument("--k", default="5,10", help="ranking cutoffs, ascending (default 5,10)")
    p.add_argument("--agg", choices=[a.value for a in Aggregation], default="max",
                   help="profile aggregation (default max)")
    p.add_argument("--out", default=None, help="report file (default: stdout)")
    p.add_argument("--format", choices=("csv", "text"), default="csv",
                   help="report format (default csv)")
    p.add_argument("--temporal-weights", action="store_true",
                   help="retrain fusion weights per case on strictly earlier cases only")
    p.add_argument("--no-standardize", action="store_true",
                   help="skip per-pool z-scoring of source scores")
    p.add_argument("--jobs", type=int, default=1, help="parallel case scoring (default 1)")
    _add_bpr_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("recommend", help="rank the unsold items for one user")
    p.add_argument("--data", required=True,
                   help="directory with metadata.csv, transactions.csv and the needed .vec files")
    p.add_argument("--user", required=True, help="user id")
    p.add_argument("--at", type=int, default=None,
                   help="timestamp to recommend at (default: after the last transaction)")
    p.add_argument("--method", default="Hyb(DNN+EVF+Metadata)",
                   help="method name (default Hyb(DNN+EVF+Metadata))")
    p.add_argument("--k", type=int, default=10, help="list length (default 10)")
    p.add_argument("--agg", choices=[a.value for a in Aggregation], default="max",
                   help="profile aggregation (default max)")
    _add_bpr_flags(p)
    p.set_defaults(func=cmd_recommend)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EmptyResultError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
