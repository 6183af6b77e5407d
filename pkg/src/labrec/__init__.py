"""Neighbourhood-based recommender for laboratory test order entry.

The heavy optional surfaces (HTTP service, figure rendering, CLI) live
in their own submodules so importing the library core stays cheap:

    labrec.service  FastAPI app factory
    labrec.figures  report figures
    labrec.cli      operator command line
"""

from .core import (
    Bag,
    BagItemMatrix,
    Item,
    PackedRow,
    RawBag,
    Vocabulary,
    build_matrix,
    build_vocabulary,
    encode_query,
    index_bags,
    pack_indices,
    read_bags_jsonl,
    unpack_bits,
    write_bags_jsonl,
)
from .errors import (
    CorruptModelError,
    DimensionError,
    EmptyDatasetError,
    EmptyQueryError,
    LabrecError,
    OutOfVocabularyError,
    ParameterError,
    SchemaError,
    VersionError,
)
from .evaluation import (
    EvalReport,
    EvalResult,
    GridSpec,
    SplitSpec,
    average_precision_at_k,
    cross_validate,
    evaluate,
    evaluate_leave_out,
    grid_search,
    recall_at_k,
    train_test_split,
)
from .ingest import IngestSummary, extract_bags, join_item_names, parse_labevents
from .persistence import FORMAT_VERSION, load_model, save_model
from .recommender import (
    DEFAULT_K,
    DEFAULT_S,
    FittedModel,
    HyperParams,
    RankedRecommendation,
    fit,
    recommend,
)
from .similarity import (
    ContingencyCounts,
    Metric,
    NeighborSet,
    contingency,
    dissimilarity,
    nearest_neighbors,
)

__version__ = "0.1.0"

__all__ = [
    "Bag",
    "BagItemMatrix",
    "ContingencyCounts",
    "CorruptModelError",
    "DEFAULT_K",
    "DEFAULT_S",
    "DimensionError",
    "EmptyDatasetError",
    "EmptyQueryError",
    "EvalReport",
    "EvalResult",
    "FORMAT_VERSION",
    "FittedModel",
    "GridSpec",
    "HyperParams",
    "IngestSummary",
    "Item",
    "LabrecError",
    "Metric",
    "NeighborSet",
    "OutOfVocabularyError",
    "PackedRow",
    "ParameterError",
    "RankedRecommendation",
    "RawBag",
    "SchemaError",
    "SplitSpec",
    "Vocabulary",
    "VersionError",
    "average_precision_at_k",
    "build_matrix",
    "build_vocabulary",
    "contingency",
    "cross_validate",
    "dissimilarity",
    "encode_query",
    "evaluate",
    "evaluate_leave_out",
    "extract_bags",
    "fit",
    "grid_search",
    "index_bags",
    "join_item_names",
    "load_model",
    "nearest_neighbors",
    "pack_indices",
    "parse_labevents",
    "read_bags_jsonl",
    "recall_at_k",
    "recommend",
    "save_model",
    "train_test_split",
    "unpack_bits",
    "write_bags_jsonl",
]
