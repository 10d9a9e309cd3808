/** Wire types mirroring the engine service's JSON responses. */

export interface TupleView {
  nodes: string[];
  paths: string[];
  content_scores: number[];
  distance: number;
  score: number;
}

export interface TopKView {
  k: number;
  tuples: TupleView[];
}

export interface BucketEntry {
  path: string;
  doc_frequency: number;
  occurrence: number;
}

export interface BucketView {
  term: number;
  entries: BucketEntry[];
}

export interface ConnectionView {
  endpoints: [string, string];
  steps: (string | number)[][];
  length: number;
  render: string;
  tuples: number[];
}

export interface ConnectionsView {
  groups: Record<string, string[]>;
  connections: Record<string, ConnectionView>;
}

export interface SessionCreated {
  session_id: string;
  topk: TopKView;
  context_buckets: BucketView[];
}

export interface ContextsApplied {
  topk: TopKView;
  connections: ConnectionsView;
}

export interface MaterializeResult {
  row_count: number;
  result: string;
}

export interface ColumnMatchView {
  term: number;
  paths: string[];
  classification: "full" | "partial" | "none";
  full: [string, string][];
  partial: { kind: string; name: string; missing: string[] }[];
}

export interface MatchReportView {
  columns: ColumnMatchView[];
  facts_matched: string[];
  dimensions_matched: string[];
  warnings: string[];
}

export interface CatalogEntryView {
  name: string;
  contexts: { context: string; key: string[] }[];
}

export interface CatalogView {
  facts: CatalogEntryView[];
  dimensions: CatalogEntryView[];
}

export interface CubeBuilt {
  manifest: {
    query: string;
    row_count: number;
    facts: string[];
    dimensions: string[];
    tables: {
      file: string;
      name: string;
      kind: string;
      key_columns: string[];
      value_columns: string[];
      rows: number;
    }[];
  };
  tables: Record<string, string>;
}

export interface NewDefinition {
  kind: "fact" | "dimension";
  name: string;
  column: number;
  contexts: { context: string; key: string[] }[];
}
