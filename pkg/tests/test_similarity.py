"""Contingency kernel and metric formulas against independent references.

The naive reference rebuilds (a, b, c, d) by walking explicit 0/1
vectors column by column, touching none of the packed-word machinery.
The frozen (1,1,1,1) fixture values were derived by hand from the five
formulas before the implementation existed.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from labrec import (
    Bag,
    BagItemMatrix,
    ContingencyCounts,
    DimensionError,
    EmptyDatasetError,
    Metric,
    PackedRow,
    ParameterError,
    contingency,
    dissimilarity,
    nearest_neighbors,
    pack_indices,
)


def naive_contingency(x, y):
    """Per-column reference on explicit 0/1 lists."""
    a = b = c = d = 0
    for xi, yi in zip(x, y):
        if xi and yi:
            a += 1
        elif xi and not yi:
            b += 1
        elif not xi and yi:
            c += 1
        else:
            d += 1
    return a, b, c, d


def naive_metric(name, a, b, c, d):
    n = a + b + c + d
    if name == "jaccard":
        return (b + c) / (a + b + c) if a + b + c else 0.0
    if name == "matching":
        return (b + c) / n
    if name == "rogerstanimoto":
        return 2 * (b + c) / (a + d + 2 * (b + c))
    if name == "russellrao":
        return (n - a) / n
    if name == "kulsinski":
        return (b + c - a + n) / (b + c + n)
    raise AssertionError(name)


def row_from_bits(bits):
    n = len(bits)
    return PackedRow(pack_indices([i for i, x in enumerate(bits) if x], n), n)


FIXTURE_EXPECTED = {
    Metric.JACCARD: 2 / 3,
    Metric.KULSINSKI: 5 / 6,
    Metric.MATCHING: 1 / 2,
    Metric.ROGERSTANIMOTO: 2 / 3,
    Metric.RUSSELLRAO: 3 / 4,
}


class TestContingency:
    def test_frozen_fixture_pair(self):
        # u=1100, v=1010 realises (a,b,c,d) = (1,1,1,1)
        u = row_from_bits([1, 1, 0, 0])
        v = row_from_bits([1, 0, 1, 0])
        counts = contingency(u, v)
        assert (counts.a, counts.b, counts.c, counts.d) == (1, 1, 1, 1)

    def test_randomized_against_naive(self):
        rng = np.random.default_rng(1234)
        for _ in range(300):
            n = int(rng.integers(1, 301))
            x = (rng.random(n) < 0.3).astype(int).tolist()
            y = (rng.random(n) < 0.3).astype(int).tolist()
            counts = contingency(row_from_bits(x), row_from_bits(y))
            assert (counts.a, counts.b, counts.c, counts.d) == naive_contingency(x, y)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            contingency(row_from_bits([1]), row_from_bits([1, 0]))

    @given(
        n=st.integers(min_value=1, max_value=300),
        data=st.data(),
    )
    @settings(max_examples=150, deadline=None)
    def test_counts_partition_n(self, n, data):
        x = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
        y = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
        counts = contingency(row_from_bits(x), row_from_bits(y))
        assert counts.a + counts.b + counts.c + counts.d == n
        assert counts.n_total == n


class TestMetricFormulas:
    @pytest.mark.parametrize("metric,expected", sorted(FIXTURE_EXPECTED.items()))
    def test_frozen_fixture_values(self, metric, expected):
        counts = ContingencyCounts(1, 1, 1, 1)
        assert dissimilarity(metric, counts) == pytest.approx(expected, abs=0)

    def test_jaccard_empty_vs_empty_is_zero(self):
        assert dissimilarity(Metric.JACCARD, ContingencyCounts(0, 0, 0, 5)) == 0.0

    def test_zero_positions_rejected(self):
        with pytest.raises(DimensionError):
            dissimilarity(Metric.JACCARD, ContingencyCounts(0, 0, 0, 0))

    @given(
        counts=st.tuples(
            st.integers(0, 200), st.integers(0, 200),
            st.integers(0, 200), st.integers(0, 200),
        ).filter(lambda t: sum(t) > 0),
        metric=st.sampled_from(list(Metric)),
    )
    @settings(max_examples=300, deadline=None)
    def test_matches_naive_formula_and_range(self, counts, metric):
        a, b, c, d = counts
        value = dissimilarity(metric, ContingencyCounts(a, b, c, d))
        assert value == naive_metric(metric.value, a, b, c, d)
        assert 0.0 <= value <= 1.0

    def test_self_distance_zero_only_for_proper_metrics(self):
        # a bag vs itself: b = c = 0
        counts = ContingencyCounts(3, 0, 0, 7)
        assert dissimilarity(Metric.JACCARD, counts) == 0.0
        assert dissimilarity(Metric.MATCHING, counts) == 0.0
        assert dissimilarity(Metric.ROGERSTANIMOTO, counts) == 0.0
        # russellrao/kulsinski reward dense vectors; self-distance is (n-a)/n
        assert dissimilarity(Metric.RUSSELLRAO, counts) == 0.7
        assert dissimilarity(Metric.KULSINSKI, counts) == 0.7

    @given(
        n=st.integers(min_value=1, max_value=120),
        data=st.data(),
        metric=st.sampled_from(list(Metric)),
    )
    @settings(max_examples=150, deadline=None)
    def test_symmetry(self, n, data, metric):
        x = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
        y = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
        u, v = row_from_bits(x), row_from_bits(y)
        assert dissimilarity(metric, contingency(u, v)) == dissimilarity(
            metric, contingency(v, u)
        )


class TestScipyCrossCheck:
    SCIPY_NAMES = {
        Metric.JACCARD: "jaccard",
        Metric.MATCHING: "hamming",
        Metric.ROGERSTANIMOTO: "rogerstanimoto",
        Metric.RUSSELLRAO: "russellrao",
    }

    @pytest.mark.parametrize("metric", sorted(SCIPY_NAMES))
    def test_agreement_on_random_pairs(self, metric):
        scipy_distance = pytest.importorskip("scipy.spatial.distance")
        reference = getattr(scipy_distance, self.SCIPY_NAMES[metric])
        rng = np.random.default_rng(99)
        for _ in range(100):
            n = int(rng.integers(1, 200))
            x = rng.random(n) < 0.4
            y = rng.random(n) < 0.4
            ours = dissimilarity(
                metric, contingency(row_from_bits(x.tolist()), row_from_bits(y.tolist()))
            )
            assert ours == pytest.approx(float(reference(x, y)), abs=1e-12)


class TestMetricParse:
    def test_case_insensitive(self):
        assert Metric.parse("Jaccard") is Metric.JACCARD
        assert Metric.parse("  KULSINSKI ") is Metric.KULSINSKI

    def test_unknown_lists_valid_names(self):
        with pytest.raises(ParameterError) as excinfo:
            Metric.parse("jacard")
        message = str(excinfo.value)
        for name in ("jaccard", "kulsinski", "matching", "rogerstanimoto", "russellrao"):
            assert name in message


def full_sort_reference(matrix, query, s, metric):
    """Scalar-path reference: sort all rows by (distance, index)."""
    dists = [
        dissimilarity(metric, contingency(query, matrix.row(u)))
        for u in range(matrix.m)
    ]
    order = sorted(range(matrix.m), key=lambda u: (dists[u], u))[: min(s, matrix.m)]
    return order, [dists[u] for u in order]


class TestNearestNeighbors:
    def toy_matrix(self):
        bags = [Bag(item_indices=t) for t in [(0, 1), (0, 1, 2), (2,)]]
        return BagItemMatrix.from_bags(bags, 3)

    def test_toy_oracle(self):
        matrix = self.toy_matrix()
        query = row_from_bits([1, 1, 0])
        result = nearest_neighbors(matrix, query, 2, Metric.JACCARD)
        assert result.indices == (0, 1)
        assert result.distances == (0.0, 1 / 3)

    def test_ties_resolve_by_row_index(self):
        bags = [Bag(item_indices=(0, 1)) for _ in range(4)]
        matrix = BagItemMatrix.from_bags(bags, 2)
        result = nearest_neighbors(matrix, row_from_bits([1, 0]), 3, Metric.JACCARD)
        assert result.indices == (0, 1, 2)

    def test_s_larger_than_m_returns_all(self):
        matrix = self.toy_matrix()
        result = nearest_neighbors(matrix, row_from_bits([1, 0, 0]), 50, Metric.JACCARD)
        assert len(result) == 3

    def test_invalid_s_rejected(self):
        with pytest.raises(ParameterError):
            nearest_neighbors(self.toy_matrix(), row_from_bits([1, 0, 0]), 0, Metric.JACCARD)

    def test_empty_matrix_rejected(self):
        empty = BagItemMatrix(np.zeros((0, 1), dtype=np.uint64), 3)
        with pytest.raises(EmptyDatasetError):
            nearest_neighbors(empty, row_from_bits([1, 0, 0]), 1, Metric.JACCARD)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            nearest_neighbors(self.toy_matrix(), row_from_bits([1, 0]), 1, Metric.JACCARD)

    @pytest.mark.parametrize("metric", sorted(Metric))
    def test_matches_full_sort_reference(self, metric):
        rng = np.random.default_rng(4321)
        for _ in range(20):
            m = int(rng.integers(1, 40))
            n = int(rng.integers(1, 150))
            rows = []
            for _ in range(m):
                size = int(rng.integers(1, min(n, 12) + 1))
                rows.append(
                    Bag(item_indices=tuple(rng.choice(n, size=size, replace=False).tolist()))
                )
            matrix = BagItemMatrix.from_bags(rows, n)
            q_size = int(rng.integers(1, min(n, 8) + 1))
            q_indices = rng.choice(n, size=q_size, replace=False).tolist()
            query = PackedRow(pack_indices(q_indices, n), n)
            s = int(rng.integers(1, m + 2))
            result = nearest_neighbors(matrix, query, s, metric)
            ref_indices, ref_distances = full_sort_reference(matrix, query, s, metric)
            assert list(result.indices) == ref_indices
            # scalar and batch paths divide the same integers: exact equality
            assert list(result.distances) == ref_distances
