"""Facade wiring the store, index, guides and catalog into the
explore-refine-cube workflow used by both the CLI and the HTTP service."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .connection_summary import (
    ConnectionCache,
    ConnectionSummaryResult,
    apply_connection_selection,
    summarize_connections,
)
from .context_summary import ContextBucket, apply_context_selection, context_buckets
from .corpus_store import ContextPath, CorpusStore
from .cube_builder import (
    AugmentedResult,
    Catalog,
    StarSchema,
    augment,
    emit_star,
    match_result,
)
from .dataguide import GuideSet
from .materializer import FullResult, materialize
from .path_index import PathIndex
from .query_model import Query, parse_query
from .topk_engine import DEFAULT_K, DEFAULT_RADIUS_CAP, TopKResult, top_k


@dataclass
class EngineConfig:
    k: int = DEFAULT_K
    radius_cap: int = DEFAULT_RADIUS_CAP
    distinct: bool = False


class Engine:
    """Read-only query engine over a built store directory."""

    def __init__(
        self,
        store: CorpusStore,
        index: PathIndex,
        guides: GuideSet | None,
        catalog: Catalog,
        config: EngineConfig | None = None,
        store_dir: Path | None = None,
    ):
        self.store = store
        self.index = index
        self.guides = guides
        self.catalog = catalog
        self.config = config or EngineConfig()
        self.store_dir = store_dir
        self.connection_cache = ConnectionCache()

    @classmethod
    def open(cls, store_dir: str | Path, config: EngineConfig | None = None) -> "Engine":
        root = Path(store_dir)
        store = CorpusStore.open(root)
        index = PathIndex.open(store, root)
        try:
            guides = GuideSet.open(root)
        except Exception:
            guides = None
        catalog = Catalog.load(root)
        return cls(store, index, guides, catalog, config, store_dir=root)

    def require_guides(self) -> GuideSet:
        if self.guides is None:
            raise RuntimeError("dataguides not built; run the guides step first")
        return self.guides

    # -- workflow steps -------------------------------------------------

    def parse(self, text: str) -> Query:
        return parse_query(text)

    def top_k(self, query: Query, k: int | None = None, radius_cap: int | None = None) -> TopKResult:
        return top_k(
            self.store,
            self.index,
            query,
            k=k or self.config.k,
            radius_cap=radius_cap or self.config.radius_cap,
            distinct=self.config.distinct,
        )

    def buckets(self, query: Query) -> list[ContextBucket]:
        return context_buckets(self.index, query)

    def select_contexts(
        self,
        query: Query,
        buckets: list[ContextBucket],
        selections: Mapping[int, Iterable[ContextPath | str]],
    ) -> Query:
        normalized = {
            i: frozenset(ContextPath.of(p) for p in paths)
            for i, paths in selections.items()
        }
        return apply_context_selection(query, buckets, normalized)

    def connections(
        self, topk: TopKResult, radius_cap: int | None = None
    ) -> ConnectionSummaryResult:
        return summarize_connections(
            self.store,
            self.require_guides(),
            topk,
            radius_cap=radius_cap or self.config.radius_cap,
            cache=self.connection_cache,
        )

    def select_connections(
        self, query: Query, summary: ConnectionSummaryResult, chosen: Iterable[str]
    ) -> Query:
        return apply_connection_selection(query, summary, frozenset(chosen))

    def materialize(self, query: Query, summary: ConnectionSummaryResult) -> FullResult:
        return materialize(self.store, self.index, query, summary.connections)

    def match(self, result: FullResult):
        return match_result(result, self.catalog)

    def build_cube(
        self,
        result: FullResult,
        f_final: Iterable[str],
        d_final: Iterable[str],
        query_text: str = "",
        skip_bad_rows: bool = False,
    ) -> tuple[AugmentedResult, StarSchema]:
        aug = augment(
            self.store, result, self.catalog, f_final, d_final, skip_bad_rows
        )
        star = emit_star(self.store, aug, self.catalog, query_text)
        return aug, star

    def save_catalog(self) -> None:
        if self.store_dir is not None:
            self.catalog.save(self.store_dir)
