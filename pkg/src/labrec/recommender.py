"""Fit a neighbourhood model and rank the next most probable items.

A fitted model is nothing more than the training bag-item matrix plus
bookkeeping: answering a query means finding the s nearest training
bags, counting how many of them contain each item, and returning the
top k items by that neighbour frequency. Global item frequency over the
whole training set and the vocabulary index break ties, in that order,
so identical inputs always produce identical rankings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Bag,
    BagItemMatrix,
    Item,
    PackedRow,
    Vocabulary,
    build_matrix,
    encode_query,
    pack_indices,
)
from .errors import EmptyDatasetError, ParameterError
from .similarity import Metric, NeighborSet, nearest_neighbors

DEFAULT_S = 20
DEFAULT_K = 5


@dataclass(frozen=True)
class HyperParams:
    """Neighbour count and distance function used at query time."""

    s: int = DEFAULT_S
    metric: Metric = Metric.JACCARD

    def __post_init__(self):
        if self.s < 1:
            raise ParameterError(f"s must be >= 1, got {self.s}")
        if not isinstance(self.metric, Metric):
            object.__setattr__(self, "metric", Metric.parse(str(self.metric)))


@dataclass(frozen=True)
class RankedRecommendation:
    """Ordered (item, neighbour-frequency) pairs for one query."""

    entries: tuple[tuple[Item, int], ...]
    k_requested: int
    neighbors_used: int

    def item_ids(self) -> list[str]:
        return [item.item_id for item, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


class FittedModel:
    """Immutable bundle of matrix, vocabulary and hyperparameters.

    Safe to share across concurrent readers; ``recommend`` is a pure
    read.
    """

    def __init__(
        self,
        matrix: BagItemMatrix,
        vocabulary: Vocabulary,
        params: HyperParams,
    ):
        if matrix.m < 1:
            raise EmptyDatasetError("a model needs at least one training bag")
        if matrix.n != len(vocabulary):
            raise ParameterError(
                f"matrix has n={matrix.n} but vocabulary has {len(vocabulary)} items"
            )
        self._matrix = matrix
        self._vocabulary = vocabulary
        self._params = params
        # number of training bags containing each item
        bits = unpack_bits_matrix(matrix)
        self._global_item_frequency = bits.sum(axis=0, dtype=np.int64)
        self._global_item_frequency.setflags(write=False)

    @property
    def matrix(self) -> BagItemMatrix:
        return self._matrix

    @property
    def vocabulary(self) -> Vocabulary:
        return self._vocabulary

    @property
    def params(self) -> HyperParams:
        return self._params

    @property
    def global_item_frequency(self) -> np.ndarray:
        return self._global_item_frequency

    @property
    def m(self) -> int:
        return self._matrix.m

    @property
    def n(self) -> int:
        return self._matrix.n


def unpack_bits_matrix(matrix: BagItemMatrix) -> np.ndarray:
    """All rows expanded to a {0,1} uint8 array of shape (m, n)."""
    if matrix.m == 0:
        return np.zeros((0, matrix.n), dtype=np.uint8)
    as_bytes = np.ascontiguousarray(matrix.words, dtype="<u8").view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, : matrix.n]


def fit(bags: list[Bag], vocabulary: Vocabulary, params: HyperParams) -> FittedModel:
    """Build the training matrix and freeze it into a model.

    Fit performs no neighbour search; all work happens at query time.
    """
    if not bags:
        raise EmptyDatasetError("cannot fit on zero bags")
    return FittedModel(build_matrix(bags, vocabulary), vocabulary, params)


def _rank_neighbor_items(
    model: FittedModel,
    neighbors: NeighborSet,
    query_indices: set[int],
    k: int,
    exclude_query_items: bool,
) -> RankedRecommendation:
    rows = model.matrix.words[list(neighbors.indices)]
    as_bytes = np.ascontiguousarray(rows, dtype="<u8").view(np.uint8)
    counts = (
        np.unpackbits(as_bytes, axis=1, bitorder="little")[:, : model.n]
        .sum(axis=0, dtype=np.int64)
    )
    if exclude_query_items and query_indices:
        counts[list(query_indices)] = 0
    # primary: neighbour count desc; then global frequency desc; then index asc
    order = np.lexsort(
        (np.arange(model.n), -model.global_item_frequency, -counts)
    )
    entries = []
    for idx in order:
        if counts[idx] == 0 or len(entries) == k:
            break
        entries.append((model.vocabulary[int(idx)], int(counts[idx])))
    return RankedRecommendation(
        entries=tuple(entries),
        k_requested=k,
        neighbors_used=len(neighbors),
    )


def recommend_for_row(
    model: FittedModel,
    query: PackedRow,
    k: int,
    exclude_query_items: bool = False,
) -> RankedRecommendation:
    """Recommendation core for an already-encoded query row."""
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    neighbors = nearest_neighbors(model.matrix, query, model.params.s, model.params.metric)
    query_indices = set(query.indices())
    return _rank_neighbor_items(model, neighbors, query_indices, k, exclude_query_items)


def recommend_for_indices(
    model: FittedModel,
    query_indices: set[int],
    k: int,
    exclude_query_items: bool = False,
) -> RankedRecommendation:
    """Recommendation core for a query given as vocabulary indices."""
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    query = PackedRow(pack_indices(query_indices, model.n), model.n)
    neighbors = nearest_neighbors(model.matrix, query, model.params.s, model.params.metric)
    return _rank_neighbor_items(model, neighbors, set(query_indices), k, exclude_query_items)


def recommend(
    model: FittedModel,
    query_items: list[str],
    k: int = DEFAULT_K,
    exclude_query_items: bool = False,
) -> tuple[RankedRecommendation, list[str]]:
    """Rank the k most probable next items for a partially built bag.

    ``query_items`` may mix item_ids and display names; unrecognised
    identifiers are returned alongside the recommendation. With
    ``exclude_query_items`` the query's own items never appear in the
    result (the interactive default); without it they may (the
    evaluation default).
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    query, unknown = encode_query(query_items, model.vocabulary)
    rec = recommend_for_row(model, query, k, exclude_query_items)
    return rec, unknown
