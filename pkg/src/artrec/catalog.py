"""Transactional dataset: users, one-of-a-kind items, timestamped purchases.

A catalog is an immutable snapshot loaded from two CSV files.  Items are
one-of-a-kind: each item id appears in at most one transaction, so the pool
of purchasable items shrinks monotonically as the clock advances.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError, ParseError

ATTRIBUTES = ("color", "subject", "style", "medium", "mood")

METADATA_HEADER = ["item_id", "color", "subject", "style", "medium", "mood", "image_path"]
TRANSACTIONS_HEADER = ["user_id", "timestamp", "item_ids"]


def _check_token(value: str, what: str) -> str:
    if not value or any(ch.isspace() for ch in value) or "," in value:
        raise InputError(f"invalid {what}: {value!r} (must be non-empty, no whitespace, no commas)")
    return value


@dataclass(frozen=True)
class ItemRecord:
    """One artwork with its curated attributes and optional image reference."""

    id: str
    color: frozenset[str] = frozenset()
    subject: frozenset[str] = frozenset()
    style: frozenset[str] = frozenset()
    medium: frozenset[str] = frozenset()
    mood: frozenset[str] = frozenset()
    image_path: str | None = None

    def __post_init__(self):
        _check_token(self.id, "item id")
        for attribute in ATTRIBUTES:
            values = getattr(self, attribute)
            object.__setattr__(self, attribute, frozenset(values))
            for token in values:
                _check_token(token, f"{attribute} token")
                if token != token.lower():
                    raise InputError(f"{attribute} token must be lowercase: {token!r}")

    def tokens(self, attribute: str) -> frozenset[str]:
        if attribute not in ATTRIBUTES:
            raise InputError(f"unknown attribute: {attribute}")
        return getattr(self, attribute)


@dataclass(frozen=True)
class Transaction:
    """One purchase event: a user buys one or more items at a timestamp."""

    user: str
    timestamp: int
    items: tuple[str, ...]

    def __post_init__(self):
        _check_token(self.user, "user id")
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise InputError(f"transaction of user {self.user!r} has no items")
        if len(set(self.items)) != len(self.items):
            raise InputError(f"transaction of user {self.user!r} lists an item twice")
        for item in self.items:
            _check_token(item, "item id")


@dataclass(frozen=True)
class Catalog:
    """Validated, immutable view of items plus chronologically sorted purchases."""

    items: dict[str, ItemRecord]
    transactions: tuple[Transaction, ...]
    users: frozenset[str] = field(init=False)

    def __post_init__(self):
        sold: dict[str, str] = {}
        for tx in self.transactions:
            for item in tx.items:
                if item not in self.items:
                    raise InputError(f"unknown item: {item}")
                if item in sold:
                    raise InputError(f"item sold twice: {item}")
                sold[item] = tx.user
        ordered = tuple(sorted(self.transactions, key=_tx_key))
        object.__setattr__(self, "transactions", ordered)
        object.__setattr__(self, "users", frozenset(tx.user for tx in ordered))

    @property
    def item_ids(self) -> list[str]:
        return sorted(self.items)


def _tx_key(tx: Transaction) -> tuple[int, str, str]:
    # Total, deterministic order even when timestamps collide.
    return (tx.timestamp, tx.user, tx.items[0])


def _parse_token_set(cell: str) -> frozenset[str]:
    tokens = []
    for raw in cell.split("|"):
        token = raw.strip().lower()
        if token:
            tokens.append(token)
    return frozenset(tokens)


def load_metadata_csv(path: str | Path) -> dict[str, ItemRecord]:
    """Parse the item metadata CSV into a map of validated records."""
    path = Path(path)
    items: dict[str, ItemRecord] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "empty file, expected header") from None
        if header != METADATA_HEADER:
            raise ParseError(path, 1, f"bad header {header!r}, expected {METADATA_HEADER!r}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(METADATA_HEADER):
                raise ParseError(path, line, f"expected {len(METADATA_HEADER)} columns, got {len(row)}")
            try:
                item_id = _check_token(row[0].strip(), "item id")
            except InputError as exc:
                raise ParseError(path, line, str(exc)) from None
            if item_id in items:
                raise ParseError(path, line, f"duplicate item id: {item_id}")
            sets = {attr: _parse_token_set(cell) for attr, cell in zip(ATTRIBUTES, row[1:6])}
            image = row[6].strip() or None
            try:
                items[item_id] = ItemRecord(id=item_id, image_path=image, **sets)
            except InputError as exc:
                raise ParseError(path, line, str(exc)) from None
    return items


def load_transactions_csv(path: str | Path) -> list[Transaction]:
    """Parse the transactions CSV; rows stay in file order (catalog sorts)."""
    path = Path(path)
    out: list[Transaction] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "empty file, expected header") from None
        if header != TRANSACTIONS_HEADER:
            raise ParseError(path, 1, f"bad header {header!r}, expected {TRANSACTIONS_HEADER!r}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(TRANSACTIONS_HEADER):
                raise ParseError(path, line, f"expected {len(TRANSACTIONS_HEADER)} columns, got {len(row)}")
            try:
                user = _check_token(row[0].strip(), "user id")
                try:
                    timestamp = int(row[1].strip())
                except ValueError:
                    raise InputError(f"bad timestamp: {row[1]!r}") from None
                item_ids = tuple(_check_token(tok.strip(), "item id") for tok in row[2].split(";") if tok.strip())
                if not item_ids:
                    raise InputError("transaction has no items")
                out.append(Transaction(user=user, timestamp=timestamp, items=item_ids))
            except InputError as exc:
                raise ParseError(path, line, str(exc)) from None
    return out


def load_catalog(metadata_file: str | Path, transactions_file: str | Path) -> Catalog:
    """Load and cross-validate the two CSV files into a Catalog."""
    items = load_metadata_csv(metadata_file)
    transactions = load_transactions_csv(transactions_file)
    return Catalog(items=items, transactions=tuple(transactions))


def available_items(catalog: Catalog, t: int) -> set[str]:
    """Items not contained in any transaction that happened strictly before t."""
    sold = set()
    for tx in catalog.transactions:
        if tx.timestamp >= t:
            break
        sold.update(tx.items)
    return set(catalog.items) - sold


def profile_before(catalog: Catalog, user: str, t: int) -> list[str]:
    """All items the user bought strictly before t, in chronological order."""
    if user not in catalog.users:
        raise InputError(f"unknown user: {user}")
    profile: list[str] = []
    for tx in catalog.transactions:
        if tx.timestamp >= t:
            break
        if tx.user == user:
            profile.extend(tx.items)
    return profile


def write_metadata_csv(catalog: Catalog, path: str | Path) -> None:
    """Write item metadata in the canonical format (rows sorted by item id)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METADATA_HEADER)
        for item_id in sorted(catalog.items):
            rec = catalog.items[item_id]
            row = [item_id]
            row += ["|".join(sorted(rec.tokens(attr))) for attr in ATTRIBUTES]
            row.append(rec.image_path or "")
            writer.writerow(row)


def write_transactions_csv(catalog: Catalog, path: str | Path) -> None:
    """Write transactions in catalog (chronological) order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRANSACTIONS_HEADER)
        for tx in catalog.transactions:
            writer.writerow([tx.user, str(tx.timestamp), ";".join(tx.items)])
