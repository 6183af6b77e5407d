"""Model serialization: one JSON document, strictly validated on load.

The document stores the vocabulary, the bag contents as sorted index
arrays, and the hyper-parameters. A sha256 digest over the canonical
form of that content travels with the file so silent truncation or
editing is caught on load rather than surfacing later as bad
recommendations. ``created_at`` is metadata only and stays outside the
digest.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

from .core import Bag, BagItemMatrix, Vocabulary
from .errors import CorruptModelError, VersionError
from .recommender import FittedModel, HyperParams
from .similarity import Metric

FORMAT_VERSION = 1


def _canonical_content(
    params: HyperParams, vocabulary: Vocabulary, bags: list[list[int]]
) -> dict:
    return {
        "params": {"s": params.s, "metric": params.metric.value},
        "vocabulary": [[item.item_id, item.name] for item in vocabulary.items],
        "bags": bags,
    }


def source_digest(
    params: HyperParams, vocabulary: Vocabulary, bags: list[list[int]]
) -> str:
    """sha256 over the canonical JSON of everything that affects output."""
    canonical = json.dumps(
        _canonical_content(params, vocabulary, bags),
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_model(model: FittedModel, path: str | Path, created_at: str | None = None) -> None:
    """Write the fitted model to ``path`` as a single JSON document."""
    bags = [list(model.matrix.decode_row(u)) for u in range(model.m)]
    if created_at is None:
        created_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    document = {
        "format_version": FORMAT_VERSION,
        "created_at": created_at,
        "source_digest": source_digest(model.params, model.vocabulary, bags),
        **_canonical_content(model.params, model.vocabulary, bags),
    }
    Path(path).write_text(json.dumps(document, separators=(",", ":")) + "\n")


def load_model(path: str | Path) -> FittedModel:
    """Read a model document back, refusing anything malformed.

    Raises VersionError for an unknown format_version and
    CorruptModelError for bad JSON, missing fields, type violations or
    a digest mismatch.
    """
    try:
        raw = Path(path).read_text()
    except OSError:
        raise
    try:
        document = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorruptModelError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise CorruptModelError("model document must be a JSON object")
    version = document.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(
            f"unsupported model format_version {version!r}, expected {FORMAT_VERSION}"
        )
    for key in ("params", "vocabulary", "bags", "source_digest"):
        if key not in document:
            raise CorruptModelError(f"model document is missing {key!r}")

    params_doc = document["params"]
    if not isinstance(params_doc, dict) or not {"s", "metric"} <= params_doc.keys():
        raise CorruptModelError("params must be an object with 's' and 'metric'")
    try:
        params = HyperParams(s=params_doc["s"], metric=Metric.parse(params_doc["metric"]))
    except Exception as exc:
        raise CorruptModelError(f"invalid params: {exc}") from exc

    vocab_doc = document["vocabulary"]
    if not isinstance(vocab_doc, list) or not all(
        isinstance(pair, list) and len(pair) == 2 for pair in vocab_doc
    ):
        raise CorruptModelError("vocabulary must be a list of [item_id, name] pairs")
    try:
        vocabulary = Vocabulary.from_pairs(
            [(str(item_id), str(name)) for item_id, name in vocab_doc]
        )
    except Exception as exc:
        raise CorruptModelError(f"invalid vocabulary: {exc}") from exc

    bags_doc = document["bags"]
    if not isinstance(bags_doc, list) or not bags_doc:
        raise CorruptModelError("bags must be a non-empty list of index arrays")
    n = len(vocabulary)
    bag_lists: list[list[int]] = []
    for row, indices in enumerate(bags_doc):
        if (
            not isinstance(indices, list)
            or not indices
            or not all(isinstance(i, int) and 0 <= i < n for i in indices)
        ):
            raise CorruptModelError(
                f"bag {row} must be a non-empty list of indices in [0, {n})"
            )
        if indices != sorted(set(indices)):
            raise CorruptModelError(f"bag {row} indices must be sorted and unique")
        bag_lists.append(indices)

    expected = source_digest(params, vocabulary, bag_lists)
    if document["source_digest"] != expected:
        raise CorruptModelError("source digest mismatch; file content was altered")

    bags = [Bag(item_indices=tuple(indices)) for indices in bag_lists]
    matrix = BagItemMatrix.from_bags(bags, n)
    return FittedModel(matrix=matrix, vocabulary=vocabulary, params=params)
