"""Ranked-retrieval evaluation, deterministic splitting and grid search.

The primary evaluation protocol treats each held-out bag as both the
query and its own relevant set: the full bag is encoded, the model
recommends with query items *not* excluded, and AP@k / recall@k are
computed against the bag's items. With realistically sized bags this
yields high precision and low recall at small k. A secondary
leave-holdout protocol (query = bag minus a random holdout, relevant =
the holdout, query items excluded) is reported alongside for anyone who
wants a strict next-item view; the two tables are not comparable.

All randomness (splits, fold assignment, holdout choice) flows from
explicit integer seeds, so reports are byte-identical across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .core import Bag, Vocabulary
from .errors import ParameterError
from .recommender import FittedModel, HyperParams, fit, recommend_for_indices
from .similarity import Metric

DEFAULT_SEED = 42
DEFAULT_TEST_FRACTION = 1.0 / 3.0
DEFAULT_S_GRID = (10, 20, 50, 80, 100)
DEFAULT_FOLDS = 5
DEFAULT_SCORING_K = 5
DEFAULT_EVAL_KS = (3, 5, 10)

PRIMARY_PROTOCOL = {
    "query": "full_bag",
    "relevant": "full_bag",
    "exclude_query_items": False,
}
SECONDARY_PROTOCOL = {
    "query": "bag_minus_holdout",
    "relevant": "holdout",
    "exclude_query_items": True,
    "note": "secondary protocol; numbers are not comparable with the primary table",
}


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic shuffled train/test split."""

    test_fraction: float = DEFAULT_TEST_FRACTION
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ParameterError(
                f"test_fraction must be in (0, 1), got {self.test_fraction}"
            )


def train_test_split(bags: Sequence[Bag], spec: SplitSpec) -> tuple[list[Bag], list[Bag]]:
    """Shuffle under the seed and cut off round(m * fraction) test bags.

    The two sides are disjoint, exhaustive, and in shuffled order; the
    same seed always reproduces the same partition.
    """
    m = len(bags)
    if m < 3:
        raise ParameterError(f"need at least 3 bags to split, got {m}")
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(m)
    n_test = int(round(m * spec.test_fraction))
    n_test = min(max(n_test, 1), m - 1)
    test = [bags[i] for i in perm[:n_test]]
    train = [bags[i] for i in perm[n_test:]]
    return train, test


def split_indices(m: int, spec: SplitSpec) -> tuple[list[int], list[int]]:
    """The (train, test) bag index lists the split would produce."""
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(m)
    n_test = int(round(m * spec.test_fraction))
    n_test = min(max(n_test, 1), m - 1)
    return [int(i) for i in perm[n_test:]], [int(i) for i in perm[:n_test]]


def average_precision_at_k(
    recommended: Sequence[Hashable], relevant: set, k: int
) -> float:
    """AP@k: mean precision at each hit rank, over min(|relevant|, k).

    The min(|relevant|, k) denominator keeps AP@k at 1.0 for a perfect
    ranking even when the list is shorter than the relevant set.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if not relevant:
        raise ParameterError("relevant set must be non-empty")
    hits = 0
    precision_sum = 0.0
    for rank, item in enumerate(recommended[:k], start=1):
        if item in relevant:
            hits += 1
            precision_sum += hits / rank
    return precision_sum / min(len(relevant), k)


def recall_at_k(recommended: Sequence[Hashable], relevant: set, k: int) -> float:
    """Fraction of the relevant set found in the top k."""
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if not relevant:
        raise ParameterError("relevant set must be non-empty")
    return len(set(recommended[:k]) & relevant) / len(relevant)


@dataclass(frozen=True)
class EvalResult:
    """MAP@k and MAR@k over a query set, with skip accounting."""

    map_at_k: float
    mar_at_k: float
    k: int
    queries_evaluated: int
    queries_skipped: int


def evaluate(model: FittedModel, eval_bags: Sequence[Bag], k: int) -> EvalResult:
    """Score the model on held-out bags under the primary protocol.

    Each bag's items serve as both query and relevant set; items the
    model has never seen are dropped from the query, and bags with no
    known items are skipped and counted.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if not eval_bags:
        raise ParameterError("eval_bags must be non-empty")
    n = model.n
    ap_sum = 0.0
    recall_sum = 0.0
    evaluated = 0
    skipped = 0
    for bag in eval_bags:
        known = {i for i in bag.item_indices if i < n}
        if not known:
            skipped += 1
            continue
        rec = recommend_for_indices(model, known, k, exclude_query_items=False)
        ranked = [item.index for item, _ in rec.entries]
        ap_sum += average_precision_at_k(ranked, known, k)
        recall_sum += recall_at_k(ranked, known, k)
        evaluated += 1
    if evaluated == 0:
        raise ParameterError("no eval bag had any known item")
    return EvalResult(
        map_at_k=ap_sum / evaluated,
        mar_at_k=recall_sum / evaluated,
        k=k,
        queries_evaluated=evaluated,
        queries_skipped=skipped,
    )


def evaluate_leave_out(
    model: FittedModel,
    eval_bags: Sequence[Bag],
    k: int,
    holdout: int = 1,
    seed: int = DEFAULT_SEED,
) -> EvalResult:
    """Secondary protocol: hide items from each bag and try to get them back.

    For every bag with more than ``holdout`` known items, a seeded
    random holdout becomes the relevant set and the remaining items the
    query; query items are excluded from the recommendations. Bags too
    small to split are skipped and counted.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if holdout < 1:
        raise ParameterError(f"holdout must be >= 1, got {holdout}")
    if not eval_bags:
        raise ParameterError("eval_bags must be non-empty")
    rng = np.random.default_rng(seed)
    n = model.n
    ap_sum = 0.0
    recall_sum = 0.0
    evaluated = 0
    skipped = 0
    for bag in eval_bags:
        known = sorted(i for i in bag.item_indices if i < n)
        if len(known) <= holdout:
            skipped += 1
            continue
        held = set(
            int(i) for i in rng.choice(known, size=holdout, replace=False)
        )
        query = set(known) - held
        rec = recommend_for_indices(model, query, k, exclude_query_items=True)
        ranked = [item.index for item, _ in rec.entries]
        ap_sum += average_precision_at_k(ranked, held, k)
        recall_sum += recall_at_k(ranked, held, k)
        evaluated += 1
    if evaluated == 0:
        raise ParameterError("every eval bag was too small for the holdout")
    return EvalResult(
        map_at_k=ap_sum / evaluated,
        mar_at_k=recall_sum / evaluated,
        k=k,
        queries_evaluated=evaluated,
        queries_skipped=skipped,
    )


def _fold_assignment(m: int, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded permutation cut into ``folds`` chunks of near-equal size."""
    rng = np.random.default_rng(seed)
    return np.array_split(rng.permutation(m), folds)


def cross_validate(
    bags: Sequence[Bag],
    vocabulary: Vocabulary,
    params: HyperParams,
    folds: int = DEFAULT_FOLDS,
    scoring_k: int = DEFAULT_SCORING_K,
    seed: int = DEFAULT_SEED,
) -> float:
    """Mean MAP@scoring_k over seeded folds (fit on the rest, score the fold)."""
    if folds < 2:
        raise ParameterError(f"folds must be >= 2, got {folds}")
    if len(bags) < folds:
        raise ParameterError(f"cannot make {folds} folds from {len(bags)} bags")
    assignment = _fold_assignment(len(bags), folds, seed)
    scores = []
    for fold in assignment:
        in_fold = set(int(i) for i in fold)
        train = [bag for i, bag in enumerate(bags) if i not in in_fold]
        test = [bags[int(i)] for i in fold]
        model = fit(train, vocabulary, params)
        scores.append(evaluate(model, test, scoring_k).map_at_k)
    return sum(scores) / len(scores)


@dataclass(frozen=True)
class GridSpec:
    """Full cross product of neighbour counts and metrics to try."""

    s_values: tuple[int, ...] = DEFAULT_S_GRID
    metrics: tuple[Metric, ...] = tuple(Metric)
    folds: int = DEFAULT_FOLDS
    scoring_k: int = DEFAULT_SCORING_K
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not self.s_values or not self.metrics:
            raise ParameterError("grid must contain at least one cell")
        if any(s < 1 for s in self.s_values):
            raise ParameterError("all s values must be >= 1")
        if self.folds < 2:
            raise ParameterError(f"folds must be >= 2, got {self.folds}")
        if self.scoring_k < 1:
            raise ParameterError(f"scoring_k must be >= 1, got {self.scoring_k}")


@dataclass
class EvalReport:
    """Grid-search table, winning cell, and (optionally) test metrics."""

    s_values: tuple[int, ...]
    metrics: tuple[Metric, ...]
    folds: int
    scoring_k: int
    seed: int
    cv_scores: dict[tuple[str, int], float]
    best: HyperParams
    best_score: float
    dataset_bags: int
    dataset_items: int
    test_metrics: dict[int, EvalResult] = field(default_factory=dict)
    secondary_test_metrics: dict[int, EvalResult] = field(default_factory=dict)

    def score(self, metric: Metric | str, s: int) -> float:
        name = metric.value if isinstance(metric, Metric) else metric
        return self.cv_scores[(name, s)]

    def table_text(self) -> str:
        """The grid as a text table: metric rows x s columns, percent cells."""
        names = sorted({name for name, _ in self.cv_scores})
        label_width = max(len("Distance metric"), *(len(n) for n in names))
        cell_width = 8
        header_cells = "".join(f"{s:>{cell_width}}" for s in self.s_values)
        lines = [
            f"{'':{label_width}}{'Value of s':>{cell_width + len(header_cells) // 2}}",
            f"{'Distance metric':{label_width}}{header_cells}",
        ]
        for name in names:
            cells = "".join(
                f"{self.cv_scores[(name, s)] * 100:>{cell_width - 1}.2f}%"
                for s in self.s_values
            )
            lines.append(f"{name:{label_width}}{cells}")
        return "\n".join(lines)

    def to_record(self) -> dict:
        """Machine-readable report: every cell, best params, seeds, protocol."""
        record = {
            "kind": "grid_search_report",
            "format_version": 1,
            "grid": {
                "s_values": list(self.s_values),
                "metrics": [m.value for m in self.metrics],
                "folds": self.folds,
                "scoring_k": self.scoring_k,
                "seed": self.seed,
            },
            "protocol": dict(PRIMARY_PROTOCOL),
            "dataset": {"bags": self.dataset_bags, "items": self.dataset_items},
            "cells": [
                {"metric": name, "s": s, "mean_cv_map": self.cv_scores[(name, s)]}
                for name, s in sorted(self.cv_scores)
            ],
            "best": {
                "metric": self.best.metric.value,
                "s": self.best.s,
                "mean_cv_map": self.best_score,
            },
        }
        if self.test_metrics:
            record["test"] = {
                "primary": _results_record(self.test_metrics, PRIMARY_PROTOCOL),
            }
            if self.secondary_test_metrics:
                record["test"]["secondary_leave_out"] = _results_record(
                    self.secondary_test_metrics, SECONDARY_PROTOCOL
                )
        return record


def _results_record(by_k: dict[int, EvalResult], protocol: dict) -> dict:
    return {
        "protocol": dict(protocol),
        "by_k": [
            {
                "k": k,
                "map": by_k[k].map_at_k,
                "mar": by_k[k].mar_at_k,
                "queries_evaluated": by_k[k].queries_evaluated,
                "queries_skipped": by_k[k].queries_skipped,
            }
            for k in sorted(by_k)
        ],
    }


def metrics_table_text(by_k: dict[int, EvalResult]) -> str:
    """MAP/MAR rows by k columns, mirroring the grid table's styling."""
    ks = sorted(by_k)
    label_width = len("Performance metric")
    cell_width = 8
    header_cells = "".join(f"{k:>{cell_width}}" for k in ks)
    lines = [
        f"{'':{label_width}}{'Value of k':>{cell_width + len(header_cells) // 2}}",
        f"{'Performance metric':{label_width}}{header_cells}",
        f"{'MAP':{label_width}}"
        + "".join(f"{by_k[k].map_at_k * 100:>{cell_width - 1}.2f}%" for k in ks),
        f"{'MAR':{label_width}}"
        + "".join(f"{by_k[k].mar_at_k * 100:>{cell_width - 1}.2f}%" for k in ks),
    ]
    return "\n".join(lines)


def grid_search(bags: Sequence[Bag], vocabulary: Vocabulary, grid: GridSpec) -> EvalReport:
    """Cross-validate every (s, metric) cell and pick the best by mean MAP.

    Fold assignment is computed once from the seed and shared by every
    cell, so cells are comparable and could be evaluated concurrently
    without changing the table. Best-cell ties break deterministically
    by (metric name, s) ascending.
    """
    if len(bags) < grid.folds:
        raise ParameterError(f"cannot make {grid.folds} folds from {len(bags)} bags")
    cv_scores: dict[tuple[str, int], float] = {}
    for metric in grid.metrics:
        for s in grid.s_values:
            cv_scores[(metric.value, s)] = cross_validate(
                bags,
                vocabulary,
                HyperParams(s=s, metric=metric),
                folds=grid.folds,
                scoring_k=grid.scoring_k,
                seed=grid.seed,
            )
    best_key = None
    best_score = -math.inf
    for name, s in sorted(cv_scores):
        if cv_scores[(name, s)] > best_score:
            best_key = (name, s)
            best_score = cv_scores[(name, s)]
    return EvalReport(
        s_values=grid.s_values,
        metrics=grid.metrics,
        folds=grid.folds,
        scoring_k=grid.scoring_k,
        seed=grid.seed,
        cv_scores=cv_scores,
        best=HyperParams(s=best_key[1], metric=Metric(best_key[0])),
        best_score=best_score,
        dataset_bags=len(bags),
        dataset_items=len(vocabulary),
    )
