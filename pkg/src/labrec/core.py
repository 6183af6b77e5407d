"""Domain types for laboratory test bags and the packed bag-item matrix.

A *bag* is the set of tests ordered for one patient at one timestamp.
Bags over a vocabulary of ``n`` items form a binary m x n matrix whose
rows are stored as packed 64-bit words, least-significant bit first, so
that column ``j`` of row ``u`` is bit ``j % 64`` of word ``j // 64``.
Padding bits beyond column ``n - 1`` are kept at zero, which lets the
popcount kernels in :mod:`labrec.similarity` run without masking.

The bags interchange format used between the CLI steps is JSON Lines:
one object per line with fields ``subject_id`` (string), ``charttime``
(timestamp string, passed through verbatim from the source data) and
``items`` (array of item_id strings).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionError,
    EmptyDatasetError,
    EmptyQueryError,
    OutOfVocabularyError,
    SchemaError,
)

WORD_BITS = 64


def _words_needed(n: int) -> int:
    return (n + WORD_BITS - 1) // WORD_BITS


@dataclass(frozen=True)
class Item:
    """One laboratory test: vocabulary position, source id, display name."""

    index: int
    item_id: str
    name: str


class Vocabulary:
    """Ordered universe of distinct items with stable integer indices.

    Index order is first-seen order during ingestion, so rebuilding from
    the same input yields identical indices. Lookup accepts either the
    item_id or the display name; on name collisions the first-seen index
    wins. Instances are immutable after construction.
    """

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[str, str]]) -> "Vocabulary":
        """Build from (item_id, name) pairs; list position becomes the index."""
        return cls([Item(i, item_id, name) for i, (item_id, name) in enumerate(pairs)])

    def __init__(self, items: Sequence[Item]):
        self._items = tuple(items)
        self._by_id: dict[str, int] = {}
        self._by_name: dict[str, int] = {}
        self._by_name_ci: dict[str, int] = {}
        for item in self._items:
            if item.index != len(self._by_id):
                raise ValueError(f"item indices must be contiguous from 0, got {item.index}")
            if item.item_id in self._by_id:
                raise ValueError(f"duplicate item_id {item.item_id!r}")
            self._by_id[item.item_id] = item.index
            self._by_name.setdefault(item.name, item.index)
            self._by_name_ci.setdefault(item.name.lower(), item.index)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __getitem__(self, index: int) -> Item:
        return self._items[index]

    @property
    def items(self) -> tuple[Item, ...]:
        return self._items

    def index_of(self, identifier: str) -> int | None:
        """Resolve an item_id or name to its index, or None if unknown.

        item_id matches take precedence over name matches; names fall
        back to a case-insensitive match.
        """
        key = identifier.strip()
        idx = self._by_id.get(key)
        if idx is None:
            idx = self._by_name.get(key)
        if idx is None:
            idx = self._by_name_ci.get(key.lower())
        return idx

    def with_names(self, names_by_item_id: Mapping[str, str]) -> "Vocabulary":
        """Return a copy whose display names are taken from the mapping.

        Items absent from the mapping keep their current name.
        """
        return Vocabulary(
            [
                Item(it.index, it.item_id, names_by_item_id.get(it.item_id, it.name))
                for it in self._items
            ]
        )


@dataclass(frozen=True)
class RawBag:
    """A bag as ingested: item_id strings plus source metadata.

    ``item_ids`` preserves first-occurrence order within the order
    group, which in turn fixes the vocabulary's first-seen index order.
    """

    subject_id: str
    charttime: str
    item_ids: tuple[str, ...]


@dataclass(frozen=True)
class Bag:
    """One order event resolved to vocabulary indices.

    ``item_indices`` is stored sorted and duplicate-free; construction
    normalises whatever order the caller passes.
    """

    item_indices: tuple[int, ...]
    subject_id: str = ""
    charttime: str = ""

    def __post_init__(self):
        normalized = tuple(sorted(set(self.item_indices)))
        if not normalized:
            raise EmptyDatasetError("a bag must contain at least one item")
        if normalized[0] < 0:
            raise OutOfVocabularyError(f"negative item index {normalized[0]}")
        object.__setattr__(self, "item_indices", normalized)

    def __len__(self) -> int:
        return len(self.item_indices)


@dataclass(frozen=True)
class PackedRow:
    """A single bag encoded as packed 64-bit words over ``n`` columns."""

    words: np.ndarray
    n: int

    def __post_init__(self):
        self.words.setflags(write=False)

    @property
    def popcount(self) -> int:
        return int(np.bitwise_count(self.words).sum(dtype=np.int64))

    def indices(self) -> tuple[int, ...]:
        return tuple(np.nonzero(unpack_bits(self.words, self.n))[0].tolist())


def pack_indices(indices: Iterable[int], n: int) -> np.ndarray:
    """Pack a set of column indices into little-endian uint64 words.

    Raises OutOfVocabularyError for any index outside [0, n).
    """
    words = np.zeros(_words_needed(n), dtype=np.uint64)
    for idx in indices:
        if not 0 <= idx < n:
            raise OutOfVocabularyError(f"item index {idx} out of range for n={n}")
        words[idx >> 6] |= np.uint64(1) << np.uint64(idx & 63)
    return words


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    """Expand packed words back to a {0,1} uint8 vector of length n."""
    as_bytes = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    return np.unpackbits(as_bytes, bitorder="little")[:n]


class BagItemMatrix:
    """Unary bag-item matrix with one packed bitset row per bag.

    Bit ``j`` of row ``u`` is set iff item ``j`` is in bag ``u``. Row
    popcounts (bag sizes) are cached at build time. Immutable after
    construction and safe to share across threads.
    """

    def __init__(self, words: np.ndarray, n: int):
        if words.ndim != 2 or words.dtype != np.uint64:
            raise ValueError("words must be a 2-D uint64 array")
        if words.shape[1] != _words_needed(n):
            raise DimensionError(
                f"{words.shape[1]} words cannot hold {n} columns"
            )
        self._words = words
        self._words.setflags(write=False)
        self._n = n
        self._row_popcounts = np.bitwise_count(words).sum(axis=1, dtype=np.int64)
        self._row_popcounts.setflags(write=False)

    @classmethod
    def from_bags(cls, bags: Sequence[Bag], n: int) -> "BagItemMatrix":
        words = np.zeros((len(bags), _words_needed(n)), dtype=np.uint64)
        for u, bag in enumerate(bags):
            words[u] = pack_indices(bag.item_indices, n)
        return cls(words, n)

    @property
    def m(self) -> int:
        return self._words.shape[0]

    @property
    def n(self) -> int:
        return self._n

    @property
    def words(self) -> np.ndarray:
        return self._words

    @property
    def row_popcounts(self) -> np.ndarray:
        return self._row_popcounts

    def row(self, u: int) -> PackedRow:
        return PackedRow(self._words[u], self._n)

    def decode_row(self, u: int) -> tuple[int, ...]:
        """The sorted item indices of bag ``u``."""
        return tuple(np.nonzero(unpack_bits(self._words[u], self._n))[0].tolist())


def build_vocabulary(raw_bags: Sequence[RawBag]) -> Vocabulary:
    """Collect every distinct item_id across bags, in first-seen order."""
    if not raw_bags:
        raise EmptyDatasetError("cannot build a vocabulary from zero bags")
    items: list[Item] = []
    seen: dict[str, int] = {}
    for bag in raw_bags:
        for item_id in bag.item_ids:
            if item_id not in seen:
                seen[item_id] = len(items)
                items.append(Item(len(items), item_id, item_id))
    return Vocabulary(items)


def build_matrix(bags: Sequence[Bag], vocabulary: Vocabulary) -> BagItemMatrix:
    """Pack bags into a bag-item matrix over the vocabulary's columns."""
    return BagItemMatrix.from_bags(bags, len(vocabulary))


def index_bags(raw_bags: Sequence[RawBag], vocabulary: Vocabulary) -> list[Bag]:
    """Resolve raw bags to index bags; unknown item_ids are an error."""
    bags = []
    for raw in raw_bags:
        indices = []
        for item_id in raw.item_ids:
            idx = vocabulary.index_of(item_id)
            if idx is None:
                raise OutOfVocabularyError(f"unknown item_id {item_id!r}")
            indices.append(idx)
        bags.append(Bag(tuple(indices), raw.subject_id, raw.charttime))
    return bags


def encode_query(
    items: Sequence[str], vocabulary: Vocabulary
) -> tuple[PackedRow, list[str]]:
    """Encode item identifiers (ids or names) into a packed query row.

    Unrecognised identifiers are reported back in the second return
    value rather than silently dropped; if nothing is recognised the
    query is empty and an EmptyQueryError is raised.
    """
    known: set[int] = set()
    unknown: list[str] = []
    for raw in items:
        label = raw.strip()
        if not label:
            continue
        idx = vocabulary.index_of(label)
        if idx is None:
            if label not in unknown:
                unknown.append(label)
        else:
            known.add(idx)
    if not known:
        raise EmptyQueryError("query contains no known items")
    return PackedRow(pack_indices(known, len(vocabulary)), len(vocabulary)), unknown


def write_bags_jsonl(raw_bags: Iterable[RawBag], path: str | Path) -> int:
    """Write bags in the interchange format; returns the record count."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for bag in raw_bags:
            record = {
                "subject_id": bag.subject_id,
                "charttime": bag.charttime,
                "items": list(bag.item_ids),
            }
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")
            count += 1
    return count


def read_bags_jsonl(path: str | Path) -> list[RawBag]:
    """Read an interchange file back into raw bags.

    Raises SchemaError on malformed records (missing fields, empty item
    arrays, wrong types).
    """
    bags: list[RawBag] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            for field_name in ("subject_id", "charttime", "items"):
                if field_name not in record:
                    raise SchemaError(f"{path}:{lineno}: missing field {field_name!r}")
            items = record["items"]
            if not isinstance(items, list) or not items:
                raise SchemaError(f"{path}:{lineno}: 'items' must be a non-empty array")
            bags.append(
                RawBag(
                    subject_id=str(record["subject_id"]),
                    charttime=str(record["charttime"]),
                    item_ids=tuple(str(i) for i in items),
                )
            )
    return bags
