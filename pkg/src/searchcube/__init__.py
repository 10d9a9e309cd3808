"""searchcube: keyword search over heterogeneous XML with interactive
context/connection refinement and star-schema cube generation."""

from .corpus_store import (
    ContextPath,
    CorpusStats,
    CorpusStore,
    DataNode,
    DeweyId,
    EdgeRecord,
    LinkSpec,
    ingest_directory,
)
from .dataguide import GuideSet, build_guides, overlap
from .engine import Engine, EngineConfig
from .path_index import PathIndex
from .query_model import Query, QueryTerm, parse_query, satisfies
from .topk_engine import TopKResult, connection_distance, top_k

__version__ = "0.1.0"

__all__ = [
    "ContextPath",
    "CorpusStats",
    "CorpusStore",
    "DataNode",
    "DeweyId",
    "EdgeRecord",
    "Engine",
    "EngineConfig",
    "GuideSet",
    "LinkSpec",
    "PathIndex",
    "Query",
    "QueryTerm",
    "TopKResult",
    "__version__",
    "build_guides",
    "connection_distance",
    "ingest_directory",
    "overlap",
    "parse_query",
    "satisfies",
    "top_k",
]
