"""Fact/dimension catalog, result-to-catalog matching, key augmentation,
and star-schema emission.

Catalog entries are <name, context list> where each context carries a
relative key: a list of paths that are either absolute (resolved inside
the anchor node's document) or anchor-relative ("./x" steps resolve among
the anchor's siblings, then descend). Matching classifies each result
column by the subset test between its distinct paths and a definition's
context set. Augmentation extends the result with every key column the
final fact/dimension sets need, re-matching newly added columns against
the catalog so e.g. an auto-added year column can bind an existing year
dimension. Emission dereferences node ids to values, merges fact tables
that share identical key columns, and verifies primary keys.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .corpus_store import ContextPath, CorpusStore, DeweyId
from .materializer import FullResult
from .text import canon_name

FACTS_FILE = "catalog_facts.json"
DIMS_FILE = "catalog_dimensions.json"


class CubeError(Exception):
    pass


class DuplicateKeyError(CubeError):
    def __init__(self, message: str, first: DeweyId, second: DeweyId):
        super().__init__(message)
        self.first = first
        self.second = second


class KeyResolutionError(CubeError):
    pass


class AugmentError(CubeError):
    def __init__(self, message: str, row_errors: list[tuple[int, str]]):
        super().__init__(message)
        self.row_errors = row_errors


@dataclass(frozen=True)
class KeyPath:
    raw: str

    def __post_init__(self) -> None:
        if not (self.raw.startswith("/") or self.raw.startswith("./")):
            raise CubeError(f"key path must be absolute (/) or relative (./): {self.raw!r}")

    @property
    def is_relative(self) -> bool:
        return self.raw.startswith("./")

    @property
    def label(self) -> str:
        segments = [s for s in self.raw.split("/") if s and s != "."]
        return canon_name(segments[-1]) if segments else "key"

    def resolve(self, store: CorpusStore, anchor: DeweyId) -> list[DeweyId]:
        """Nodes the key path denotes for one anchor node. Absolute paths
        resolve inside the anchor's document; relative paths start among
        the anchor's siblings (the anchor itself included) and descend."""
        if not self.is_relative:
            path = ContextPath.of(self.raw)
            return [n for n in store.nodes_at(path) if n.doc == anchor.doc]
        segments = [canon_name(s) for s in self.raw[2:].split("/") if s]
        parent = anchor.parent()
        if parent is None or not segments:
            return []
        current = [c for c in store.children(parent) if store.nodes[c].name == segments[0]]
        for seg in segments[1:]:
            nxt: list[DeweyId] = []
            for node in current:
                nxt.extend(
                    c for c in store.children(node) if store.nodes[c].name == seg
                )
            current = nxt
        return current


@dataclass(frozen=True)
class ContextEntry:
    context: ContextPath
    keys: tuple[KeyPath, ...]


@dataclass(frozen=True)
class CatalogDef:
    name: str
    kind: str  # "fact" | "dimension"
    entries: tuple[ContextEntry, ...]

    def __post_init__(self) -> None:
        if self.kind not in ("fact", "dimension"):
            raise CubeError(f"unknown catalog kind: {self.kind!r}")
        contexts = [e.context for e in self.entries]
        if len(set(contexts)) != len(contexts):
            raise CubeError(f"duplicate context in definition {self.name!r}")

    def contexts(self) -> frozenset[ContextPath]:
        return frozenset(e.context for e in self.entries)

    def entry_for(self, path: ContextPath) -> ContextEntry | None:
        for entry in self.entries:
            if entry.context == path:
                return entry
        return None

    def uniform_keys(self) -> tuple[KeyPath, ...]:
        """All contexts of one definition share a key list (the GDP /
        GDP_ppp style of evolution keeps keys stable across contexts)."""
        keys = self.entries[0].keys
        for entry in self.entries[1:]:
            if tuple(k.raw for k in entry.keys) != tuple(k.raw for k in keys):
                raise CubeError(
                    f"definition {self.name!r} has differing keys across contexts"
                )
        return keys

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "contexts": [
                {"context": str(e.context), "key": [k.raw for k in e.keys]}
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, kind: str, raw: Mapping) -> "CatalogDef":
        entries = tuple(
            ContextEntry(
                ContextPath.of(e["context"]),
                tuple(KeyPath(k) for k in e["key"]),
            )
            for e in raw["contexts"]
        )
        return cls(raw["name"], kind, entries)


@dataclass
class Catalog:
    facts: dict[str, CatalogDef] = field(default_factory=dict)
    dimensions: dict[str, CatalogDef] = field(default_factory=dict)

    def bucket(self, kind: str) -> dict[str, CatalogDef]:
        return self.facts if kind == "fact" else self.dimensions

    def add(self, definition: CatalogDef) -> None:
        bucket = self.bucket(definition.kind)
        if definition.name in bucket:
            raise CubeError(f"{definition.kind} {definition.name!r} already defined")
        bucket[definition.name] = definition

    def all_defs(self) -> list[CatalogDef]:
        return sorted(
            list(self.facts.values()) + list(self.dimensions.values()),
            key=lambda d: (d.kind, d.name),
        )

    def get(self, kind: str, name: str) -> CatalogDef:
        try:
            return self.bucket(kind)[name]
        except KeyError:
            raise CubeError(f"no such {kind}: {name!r}") from None

    def save(self, directory: str | Path) -> None:
        root = Path(directory)
        root.mkdir(parents=True, exist_ok=True)
        for file_name, bucket in ((FACTS_FILE, self.facts), (DIMS_FILE, self.dimensions)):
            doc = [bucket[name].to_dict() for name in sorted(bucket)]
            (root / file_name).write_text(json.dumps(doc, indent=2), encoding="utf-8")

    @classmethod
    def load(cls, directory: str | Path) -> "Catalog":
        root = Path(directory)
        catalog = cls()
        for file_name, kind in ((FACTS_FILE, "fact"), (DIMS_FILE, "dimension")):
            path = root / file_name
            if not path.exists():
                continue
            for raw in json.loads(path.read_text(encoding="utf-8")):
                catalog.add(CatalogDef.from_dict(kind, raw))
        return catalog


# -- matching -----------------------------------------------------------------


@dataclass(frozen=True)
class ColumnMatch:
    term_index: int
    paths: frozenset[ContextPath]
    full: tuple[tuple[str, str], ...]     # (kind, name)
    partial: tuple[tuple[str, str, tuple[str, ...]], ...]  # + uncovered paths

    @property
    def classification(self) -> str:
        if self.full:
            return "full"
        if self.partial:
            return "partial"
        return "none"


@dataclass
class MatchReport:
    columns: list[ColumnMatch]
    facts_matched: list[str]
    dims_matched: list[str]
    warnings: list[str]

    def to_dict(self) -> dict:
        return {
            "columns": [
                {
                    "term": c.term_index,
                    "paths": sorted(str(p) for p in c.paths),
                    "classification": c.classification,
                    "full": [list(f) for f in c.full],
                    "partial": [
                        {"kind": k, "name": n, "missing": list(miss)}
                        for k, n, miss in c.partial
                    ],
                }
                for c in self.columns
            ],
            "facts_matched": self.facts_matched,
            "dimensions_matched": self.dims_matched,
            "warnings": self.warnings,
        }


def match_result(result: FullResult, catalog: Catalog) -> MatchReport:
    """Classify every (node, path) column pair against the catalog; a full
    match needs the column's distinct paths to be a subset of the
    definition's context set."""
    columns: list[ColumnMatch] = []
    facts: set[str] = set()
    dims: set[str] = set()
    warnings_: list[str] = []
    for i in range(result.term_count):
        paths = result.column_paths(i)
        full: list[tuple[str, str]] = []
        partial: list[tuple[str, str, tuple[str, ...]]] = []
        for definition in catalog.all_defs():
            contexts = definition.contexts()
            if not paths & contexts:
                continue
            if paths <= contexts:
                full.append((definition.kind, definition.name))
                (facts if definition.kind == "fact" else dims).add(definition.name)
            else:
                missing = tuple(sorted(str(p) for p in paths - contexts))
                partial.append((definition.kind, definition.name, missing))
                warnings_.append(
                    f"column {i} only partially matches {definition.kind} "
                    f"{definition.name!r}: uncovered paths {', '.join(missing)}"
                )
        columns.append(ColumnMatch(i, paths, tuple(full), tuple(partial)))
    return MatchReport(columns, sorted(facts), sorted(dims), warnings_)


# -- key verification ----------------------------------------------------------


def extraction_value(store: CorpusStore, node_id: DeweyId) -> str:
    """Value of a node for tables and keys: its direct text, else the
    descendant concatenation."""
    node = store.nodes[node_id]
    return node.text if node.text else store.content(node_id)


def verify_keys(
    store: CorpusStore,
    definition: CatalogDef,
    column_nodes: Sequence[DeweyId],
) -> None:
    """Evaluate the definition's keys on every column node and require the
    key tuples to be unique; collisions or unresolvable keys reject the
    definition."""
    seen: dict[tuple[str, ...], DeweyId] = {}
    for node_id in column_nodes:
        node = store.nodes[node_id]
        entry = definition.entry_for(node.context)
        if entry is None:
            raise KeyResolutionError(
                f"node {node_id} at {node.context} matches no context of "
                f"{definition.name!r}"
            )
        values: list[str] = []
        for key in entry.keys:
            hits = key.resolve(store, node_id)
            if len(hits) != 1:
                raise KeyResolutionError(
                    f"key {key.raw} resolves to {len(hits)} nodes for node {node_id}"
                )
            values.append(extraction_value(store, hits[0]))
        key_tuple = tuple(values)
        if key_tuple in seen:
            raise DuplicateKeyError(
                f"key {key_tuple} collides for nodes {seen[key_tuple]} and {node_id}",
                seen[key_tuple],
                node_id,
            )
        seen[key_tuple] = node_id


def define_entry(
    store: CorpusStore,
    catalog: Catalog,
    kind: str,
    name: str,
    entries: Sequence[tuple[ContextPath | str, Sequence[str]]],
    column_nodes: Sequence[DeweyId],
    column_paths: Iterable[ContextPath] | None = None,
) -> CatalogDef:
    """User-defined fact/dimension from a result column: keys are verified
    over the column before the entry is admitted to the catalog."""
    bucket = catalog.bucket(kind)
    if name in bucket:
        raise CubeError(f"{kind} {name!r} already defined")
    definition = CatalogDef(
        name,
        kind,
        tuple(
            ContextEntry(ContextPath.of(ctx), tuple(KeyPath(k) for k in keys))
            for ctx, keys in entries
        ),
    )
    if column_paths is not None:
        col = frozenset(ContextPath.of(p) for p in column_paths)
        if not definition.contexts() <= col:
            raise CubeError(
                f"contexts of {name!r} must come from the column's paths"
            )
    verify_keys(store, definition, column_nodes)
    catalog.add(definition)
    return definition


# -- augmentation ---------------------------------------------------------------

ColumnRef = tuple[str, int]  # ("term", i) or ("added", i)


@dataclass(frozen=True)
class AddedColumn:
    label: str
    key_raw: str
    anchor: ColumnRef
    nodes: tuple[DeweyId, ...]


@dataclass
class AugmentedResult:
    base: FullResult
    added: list[AddedColumn]
    f_final: list[str]
    d_final: list[str]
    key_columns: dict[tuple[str, str], ColumnRef]   # (def name, key raw) -> column
    anchor_columns: dict[str, ColumnRef]            # def name -> value column

    def column_nodes(self, ref: ColumnRef) -> tuple[DeweyId, ...]:
        source, idx = ref
        if source == "term":
            return tuple(row.nodes[idx] for row in self.base.rows)
        return self.added[idx].nodes


def _column_paths(store: CorpusStore, aug: AugmentedResult, ref: ColumnRef) -> frozenset[ContextPath]:
    return frozenset(store.nodes[n].context for n in aug.column_nodes(ref))


def augment(
    store: CorpusStore,
    result: FullResult,
    catalog: Catalog,
    f_final: Iterable[str],
    d_final: Iterable[str],
    skip_bad_rows: bool = False,
) -> AugmentedResult:
    """Extend the result with every key (and, for user-added definitions,
    value) column the final fact/dimension sets require. Newly added
    columns are re-matched against the catalog, which can pull further
    definitions (and their keys) into the final sets."""
    rows = list(result.rows)
    aug = AugmentedResult(
        base=FullResult(result.term_count, rows),
        added=[],
        f_final=sorted(set(f_final)),
        d_final=sorted(set(d_final)),
        key_columns={},
        anchor_columns={},
    )
    bad_rows: dict[int, str] = {}

    def find_full_match(definition: CatalogDef) -> ColumnRef | None:
        contexts = definition.contexts()
        for i in range(aug.base.term_count):
            paths = frozenset(row.paths[i] for row in aug.base.rows)
            if paths and paths <= contexts:
                return ("term", i)
        for i, col in enumerate(aug.added):
            paths = _column_paths(store, aug, ("added", i))
            if paths and paths <= contexts:
                return ("added", i)
        return None

    def primary_anchor_ref() -> ColumnRef:
        for name in aug.f_final:
            if name in aug.anchor_columns:
                return aug.anchor_columns[name]
        return ("term", 0)

    def resolve_vector(key: KeyPath, anchor_nodes: Sequence[DeweyId], what: str) -> tuple[DeweyId, ...]:
        out: list[DeweyId] = []
        for row_index, anchor in enumerate(anchor_nodes):
            hits = key.resolve(store, anchor)
            if len(hits) != 1:
                bad_rows.setdefault(
                    row_index,
                    f"{what}: key {key.raw} resolves to {len(hits)} nodes "
                    f"(anchor {anchor})",
                )
                out.append(anchor)  # placeholder; row is dropped or reported
            else:
                out.append(hits[0])
        return tuple(out)

    def ensure_column(key: KeyPath, anchor_ref: ColumnRef, what: str) -> ColumnRef:
        anchor_nodes = aug.column_nodes(anchor_ref)
        vector = resolve_vector(key, anchor_nodes, what)
        for i in range(aug.base.term_count):
            if tuple(row.nodes[i] for row in aug.base.rows) == vector:
                return ("term", i)
        for i, col in enumerate(aug.added):
            if col.nodes == vector:
                return ("added", i)
        labels = {c.label for c in aug.added}
        label = key.label
        serial = 2
        while label in labels:
            label = f"{key.label}_{serial}"
            serial += 1
        aug.added.append(AddedColumn(label, key.raw, anchor_ref, vector))
        return ("added", len(aug.added) - 1)

    # Fixpoint: adding key columns can match further catalog definitions.
    processed: set[str] = set()
    for _round in range(len(catalog.all_defs()) + 2):
        pending = [catalog.get("fact", n) for n in aug.f_final]
        pending += [catalog.get("dimension", n) for n in aug.d_final]
        pending = [d for d in pending if f"{d.kind}:{d.name}" not in processed]
        if not pending:
            break
        for definition in pending:
            processed.add(f"{definition.kind}:{definition.name}")
            anchor_ref = find_full_match(definition)
            if anchor_ref is None:
                # User-added definition with no matching column: locate the
                # value node inside each row's primary document.
                primary = aug.column_nodes(primary_anchor_ref())
                nodes: list[DeweyId] = []
                for row_index, anchor in enumerate(primary):
                    hits: list[DeweyId] = []
                    for ctx in sorted(definition.contexts()):
                        hits.extend(
                            n for n in store.nodes_at(ctx) if n.doc == anchor.doc
                        )
                    if len(hits) != 1:
                        bad_rows.setdefault(
                            row_index,
                            f"{definition.kind} {definition.name!r}: context "
                            f"resolves to {len(hits)} nodes in document {anchor.doc}",
                        )
                        nodes.append(anchor)
                    else:
                        nodes.append(hits[0])
                label = canon_name(definition.name)
                existing = {c.label for c in aug.added}
                serial = 2
                while label in existing:
                    label = f"{canon_name(definition.name)}_{serial}"
                    serial += 1
                aug.added.append(
                    AddedColumn(label, str(sorted(definition.contexts())[0]), primary_anchor_ref(), tuple(nodes))
                )
                anchor_ref = ("added", len(aug.added) - 1)
            aug.anchor_columns[definition.name] = anchor_ref
            for key in definition.uniform_keys():
                ref = ensure_column(
                    key, anchor_ref, f"{definition.kind} {definition.name!r}"
                )
                aug.key_columns[(definition.name, key.raw)] = ref
        # Re-match added columns to pull in auto-bound definitions.
        for i in range(len(aug.added)):
            paths = _column_paths(store, aug, ("added", i))
            if not paths:
                continue
            for definition in catalog.all_defs():
                tag = f"{definition.kind}:{definition.name}"
                if tag in processed:
                    continue
                if paths <= definition.contexts():
                    if definition.kind == "fact" and definition.name not in aug.f_final:
                        aug.f_final.append(definition.name)
                        aug.f_final.sort()
                    if (
                        definition.kind == "dimension"
                        and definition.name not in aug.d_final
                    ):
                        aug.d_final.append(definition.name)
                        aug.d_final.sort()

    if bad_rows:
        details = sorted(bad_rows.items())
        if not skip_bad_rows:
            raise AugmentError(
                "augmentation failed for rows: "
                + "; ".join(f"row {i}: {msg}" for i, msg in details),
                [(i, msg) for i, msg in details],
            )
        keep = [i for i in range(len(rows)) if i not in bad_rows]
        aug.base = FullResult(result.term_count, [rows[i] for i in keep])
        aug.added = [
            replace(col, nodes=tuple(col.nodes[i] for i in keep)) for col in aug.added
        ]
    return aug


# -- emission ---------------------------------------------------------------------


@dataclass
class StarTable:
    name: str
    kind: str
    key_labels: tuple[str, ...]
    value_labels: tuple[str, ...]
    rows: list[tuple[str, ...]]

    @property
    def file_name(self) -> str:
        prefix = "fact" if self.kind == "fact" else "dim"
        safe = canon_name(self.name).replace("@", "")
        return f"{prefix}_{safe}.csv"

    def write(self, fh: IO[str]) -> None:
        writer = csv.writer(fh)
        writer.writerow(list(self.key_labels) + list(self.value_labels))
        for row in self.rows:
            writer.writerow(list(row))


@dataclass
class StarSchema:
    fact_tables: list[StarTable]
    dimension_tables: list[StarTable]
    manifest: dict

    def write(self, out_dir: str | Path) -> list[Path]:
        root = Path(out_dir)
        root.mkdir(parents=True, exist_ok=True)
        written: list[Path] = []
        for table in self.fact_tables + self.dimension_tables:
            target = root / table.file_name
            with target.open("w", newline="", encoding="utf-8") as fh:
                table.write(fh)
            written.append(target)
        manifest_path = root / "manifest.json"
        manifest_path.write_text(json.dumps(self.manifest, indent=2), encoding="utf-8")
        written.append(manifest_path)
        return written


def _unique_labels(labels: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out: list[str] = []
    for label in labels:
        if label not in seen:
            seen[label] = 1
            out.append(label)
        else:
            seen[label] += 1
            out.append(f"{label}_{seen[label]}")
    return out


def emit_star(
    store: CorpusStore,
    aug: AugmentedResult,
    catalog: Catalog,
    query_text: str = "",
) -> StarSchema:
    """One fact table per final fact (merged when key columns coincide),
    one dimension table per final dimension; node ids dereference to
    values, and every table's key is verified."""
    fact_groups: dict[tuple[ColumnRef, ...], list[str]] = {}
    for name in aug.f_final:
        definition = catalog.get("fact", name)
        refs = tuple(
            aug.key_columns[(name, key.raw)] for key in definition.uniform_keys()
        )
        fact_groups.setdefault(refs, []).append(name)

    def values_of(ref: ColumnRef) -> list[str]:
        return [extraction_value(store, n) for n in aug.column_nodes(ref)]

    def labels_for(names: list[str], refs: tuple[ColumnRef, ...]) -> tuple[list[str], list[str]]:
        definition = catalog.get("fact", names[0])
        key_labels = [key.label for key in definition.uniform_keys()]
        return _unique_labels(key_labels), _unique_labels([canon_name(n) for n in names])

    fact_tables: list[StarTable] = []
    for refs, names in sorted(fact_groups.items(), key=lambda kv: kv[1]):
        names = sorted(names)
        key_labels, measure_labels = labels_for(names, refs)
        key_vectors = [values_of(r) for r in refs]
        measure_vectors = [values_of(aug.anchor_columns[n]) for n in names]
        rows: set[tuple[str, ...]] = set()
        for i in range(len(aug.base.rows)):
            rows.add(
                tuple(v[i] for v in key_vectors) + tuple(v[i] for v in measure_vectors)
            )
        ordered = sorted(rows)
        key_width = len(refs)
        seen: dict[tuple[str, ...], tuple[str, ...]] = {}
        for row in ordered:
            key = row[:key_width]
            if key in seen and seen[key] != row:
                raise CubeError(
                    f"fact table {'_'.join(names)}: key {key} is not unique"
                )
            seen[key] = row
        fact_tables.append(
            StarTable(
                name="_".join(names),
                kind="fact",
                key_labels=tuple(key_labels),
                value_labels=tuple(measure_labels),
                rows=ordered,
            )
        )

    dim_tables: list[StarTable] = []
    for name in aug.d_final:
        definition = catalog.get("dimension", name)
        refs = [aug.key_columns[(name, key.raw)] for key in definition.uniform_keys()]
        key_labels = _unique_labels([key.label for key in definition.uniform_keys()])
        key_vectors = [values_of(r) for r in refs]
        value_vector = values_of(aug.anchor_columns[name])
        rows = set()
        for i in range(len(aug.base.rows)):
            rows.add(tuple(v[i] for v in key_vectors) + (value_vector[i],))
        ordered = sorted(rows)
        seen_keys: dict[tuple[str, ...], tuple[str, ...]] = {}
        for row in ordered:
            key = row[: len(refs)]
            if key in seen_keys and seen_keys[key] != row:
                raise CubeError(f"dimension table {name}: key {key} is not unique")
            seen_keys[key] = row
        dim_tables.append(
            StarTable(
                name=name,
                kind="dimension",
                key_labels=tuple(key_labels),
                value_labels=("value",),
                rows=ordered,
            )
        )

    manifest = {
        "query": query_text,
        "row_count": len(aug.base.rows),
        "facts": aug.f_final,
        "dimensions": aug.d_final,
        "term_columns": [
            {
                "term": i,
                "paths": sorted(
                    str(p) for p in {row.paths[i] for row in aug.base.rows}
                ),
            }
            for i in range(aug.base.term_count)
        ],
        "added_columns": [
            {
                "label": c.label,
                "key": c.key_raw,
                "anchor": list(c.anchor),
            }
            for c in aug.added
        ],
        "tables": [
            {
                "file": t.file_name,
                "name": t.name,
                "kind": t.kind,
                "key_columns": list(t.key_labels),
                "value_columns": list(t.value_labels),
                "rows": len(t.rows),
            }
            for t in fact_tables + dim_tables
        ],
    }
    return StarSchema(fact_tables, dim_tables, manifest)
