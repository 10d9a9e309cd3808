"""HTTP service exposing the explore-refine-cube loop with session state.

Sessions walk a fixed order: query -> context selection -> connection
selection -> materialize -> match/catalog -> cube. Revising contexts
invalidates everything downstream; out-of-order calls answer 409. All
bodies are JSON; emitted tables download as CSV.
"""

from __future__ import annotations

import io
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse, PlainTextResponse
from pydantic import BaseModel

from .connection_summary import ConnectionSummaryResult
from .context_summary import ContextBucket
from .cube_builder import CubeError, define_entry
from .engine import Engine
from .materializer import FullResult, PlanningError
from .query_model import InvalidSelectionError, Query, QuerySyntaxError, query_from_dict
from .search_expr import SearchSyntaxError
from .topk_engine import TopKResult

SESSION_TTL_SECONDS = 3600


class QueryBody(BaseModel):
    query: str | None = None
    terms: list[dict] | None = None  # structured alternative to the text form
    k: int | None = None
    radius_cap: int | None = None


class ContextSelectionBody(BaseModel):
    selections: dict[str, list[str]]


class ConnectionSelectionBody(BaseModel):
    chosen: list[str]


class CatalogEntryBody(BaseModel):
    kind: str
    name: str
    column: int
    contexts: list[dict]


class CubeBody(BaseModel):
    facts: list[str] | None = None
    dimensions: list[str] | None = None
    skip_bad_rows: bool = False


@dataclass
class Session:
    id: str
    query: Query
    query_text: str
    buckets: list[ContextBucket]
    topk: TopKResult
    summary: ConnectionSummaryResult | None = None
    result: FullResult | None = None
    tables: dict[str, str] = field(default_factory=dict)
    manifest: dict | None = None
    created: float = field(default_factory=time.time)
    expires: float = field(default_factory=lambda: time.time() + SESSION_TTL_SECONDS)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _bucket_json(buckets: list[ContextBucket]) -> list[dict]:
    return [
        {
            "term": b.term_index,
            "entries": [
                {
                    "path": str(e.path),
                    "doc_frequency": e.doc_frequency,
                    "occurrence": e.occurrence,
                }
                for e in b.entries
            ],
        }
        for b in buckets
    ]


def _topk_json(topk: TopKResult) -> dict:
    return {
        "k": topk.k,
        "tuples": [
            {
                "nodes": [str(n) for n in t.nodes],
                "paths": [str(p) for p in t.paths],
                "content_scores": list(t.content_scores),
                "distance": t.distance,
                "score": t.score,
            }
            for t in topk.tuples
        ],
    }


def _summary_json(summary: ConnectionSummaryResult) -> dict:
    return {
        "groups": {
            f"{i}-{j}": list(ids) for (i, j), ids in sorted(summary.groups.items())
        },
        "connections": {
            cid: {
                "endpoints": [str(conn.endpoint_a), str(conn.endpoint_b)],
                "steps": [list(s) for s in conn.steps],
                "length": conn.length,
                "render": conn.render(),
                "tuples": sorted(summary.provenance.get(cid, frozenset())),
            }
            for cid, conn in sorted(summary.connections.items())
        },
    }


def create_app(engine: Engine, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="searchcube", version="0.1.0")
    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()

    def get_session(session_id: str) -> Session:
        with sessions_lock:
            session = sessions.get(session_id)
            if session is None:
                raise HTTPException(status_code=404, detail="unknown session")
            if session.expires < time.time():
                del sessions[session_id]
                raise HTTPException(status_code=404, detail="session expired")
            return session

    def conflict(message: str) -> HTTPException:
        return HTTPException(status_code=409, detail=message)

    @app.post("/sessions")
    def create_session(body: QueryBody) -> dict:
        try:
            if body.terms is not None:
                query = query_from_dict({"terms": body.terms})
            elif body.query is not None:
                query = engine.parse(body.query)
            else:
                raise HTTPException(status_code=400, detail="query or terms required")
        except (QuerySyntaxError, SearchSyntaxError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        buckets = engine.buckets(query)
        topk = engine.top_k(query, k=body.k, radius_cap=body.radius_cap)
        session = Session(
            id=secrets.token_hex(8),
            query=query,
            query_text=body.query or query.render(),
            buckets=buckets,
            topk=topk,
        )
        with sessions_lock:
            sessions[session.id] = session
        return {
            "session_id": session.id,
            "topk": _topk_json(topk),
            "context_buckets": _bucket_json(buckets),
        }

    @app.post("/sessions/{session_id}/contexts")
    def select_contexts(session_id: str, body: ContextSelectionBody) -> dict:
        session = get_session(session_id)
        with session.lock:
            try:
                selections = {int(k): set(v) for k, v in body.selections.items()}
                session.query = engine.select_contexts(
                    session.query, session.buckets, selections
                )
            except (InvalidSelectionError, ValueError) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            session.topk = engine.top_k(session.query)
            session.summary = engine.connections(session.topk)
            session.result = None
            session.tables = {}
            session.manifest = None
            return {
                "topk": _topk_json(session.topk),
                "connections": _summary_json(session.summary),
            }

    @app.post("/sessions/{session_id}/connections")
    def select_connections(session_id: str, body: ConnectionSelectionBody) -> dict:
        session = get_session(session_id)
        with session.lock:
            if session.summary is None:
                raise conflict("select contexts before connections")
            try:
                session.query = engine.select_connections(
                    session.query, session.summary, set(body.chosen)
                )
            except InvalidSelectionError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            session.result = None
            session.tables = {}
            session.manifest = None
            return {"ok": True, "chosen": sorted(body.chosen)}

    @app.post("/sessions/{session_id}/materialize")
    def materialize(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            refinement = session.query.refinement
            if (
                session.summary is None
                or refinement is None
                or refinement.selected_connections is None
            ):
                raise conflict("select connections before materializing")
            try:
                session.result = engine.materialize(session.query, session.summary)
            except PlanningError as exc:
                raise conflict(str(exc))
            return {"row_count": len(session.result.rows), "result": "materialized"}

    @app.get("/sessions/{session_id}/rows.csv")
    def download_rows(session_id: str) -> PlainTextResponse:
        session = get_session(session_id)
        if session.result is None:
            raise conflict("materialize before downloading rows")
        buf = io.StringIO()
        session.result.write_csv(buf)
        return PlainTextResponse(buf.getvalue(), media_type="text/csv")

    @app.get("/sessions/{session_id}/match")
    def match(session_id: str) -> dict:
        session = get_session(session_id)
        if session.result is None:
            raise conflict("materialize before matching")
        return engine.match(session.result).to_dict()

    @app.post("/sessions/{session_id}/catalog")
    def add_catalog_entry(session_id: str, body: CatalogEntryBody) -> dict:
        session = get_session(session_id)
        with session.lock:
            if session.result is None:
                raise conflict("materialize before defining catalog entries")
            if body.column < 0 or body.column >= session.result.term_count:
                raise HTTPException(status_code=400, detail="no such column")
            nodes = [row.nodes[body.column] for row in session.result.rows]
            paths = {row.paths[body.column] for row in session.result.rows}
            try:
                define_entry(
                    engine.store,
                    engine.catalog,
                    body.kind,
                    body.name,
                    [(e["context"], e["key"]) for e in body.contexts],
                    nodes,
                    column_paths=paths,
                )
            except CubeError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            engine.save_catalog()
            return engine.match(session.result).to_dict()

    @app.post("/sessions/{session_id}/cube")
    def build_cube(session_id: str, body: CubeBody) -> dict:
        session = get_session(session_id)
        with session.lock:
            if session.result is None:
                raise conflict("materialize before building the cube")
            report = engine.match(session.result)
            f_final = body.facts if body.facts is not None else report.facts_matched
            d_final = (
                body.dimensions if body.dimensions is not None else report.dims_matched
            )
            try:
                _aug, star = engine.build_cube(
                    session.result,
                    f_final,
                    d_final,
                    query_text=session.query_text,
                    skip_bad_rows=body.skip_bad_rows,
                )
            except CubeError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            session.tables = {}
            for table in star.fact_tables + star.dimension_tables:
                buf = io.StringIO()
                table.write(buf)
                session.tables[table.file_name] = buf.getvalue()
            session.manifest = star.manifest
            return {
                "manifest": star.manifest,
                "tables": {
                    name: f"/sessions/{session_id}/tables/{name}"
                    for name in sorted(session.tables)
                },
            }

    @app.get("/sessions/{session_id}/tables/{file_name}")
    def download_table(session_id: str, file_name: str) -> PlainTextResponse:
        session = get_session(session_id)
        if file_name not in session.tables:
            raise HTTPException(status_code=404, detail="no such table")
        return PlainTextResponse(session.tables[file_name], media_type="text/csv")

    @app.get("/catalog")
    def get_catalog() -> dict:
        return {
            "facts": [d.to_dict() for d in engine.catalog.all_defs() if d.kind == "fact"],
            "dimensions": [
                d.to_dict() for d in engine.catalog.all_defs() if d.kind == "dimension"
            ],
        }

    @app.get("/guides/stats")
    def guide_stats() -> dict:
        return engine.require_guides().stats()

    ui_root = Path(ui_dir) if ui_dir else Path(os.environ.get("SEARCHCUBE_UI_DIR", ""))
    if ui_root and ui_root.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_root), html=True), name="ui")

    @app.get("/", response_class=HTMLResponse)
    def root() -> str:
        return (
            "<html><body><h1>searchcube</h1>"
            "<p>POST /sessions to begin; the UI (when built) lives at /ui.</p>"
            "</body></html>"
        )

    return app
