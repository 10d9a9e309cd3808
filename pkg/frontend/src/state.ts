/** View state for the explore-refine-cube loop. The server owns every
 * computed value; this records only the user's in-flight selections and
 * the latest responses, and resets downstream state when an upstream
 * choice changes. */

import type {
  BucketView,
  CatalogView,
  ConnectionsView,
  CubeBuilt,
  MatchReportView,
  TopKView,
} from "./types.js";

export interface ViewState {
  queryText: string;
  sessionId: string | null;
  topk: TopKView | null;
  buckets: BucketView[] | null;
  contextSelections: Map<number, Set<string>>;
  connections: ConnectionsView | null;
  chosenConnections: Set<string>;
  rowCount: number | null;
  matchReport: MatchReportView | null;
  catalog: CatalogView | null;
  factChoices: Set<string>;
  dimensionChoices: Set<string>;
  cube: CubeBuilt | null;
  busy: boolean;
  error: string | null;
}

export function initialState(): ViewState {
  return {
    queryText: "",
    sessionId: null,
    topk: null,
    buckets: null,
    contextSelections: new Map(),
    connections: null,
    chosenConnections: new Set(),
    rowCount: null,
    matchReport: null,
    catalog: null,
    factChoices: new Set(),
    dimensionChoices: new Set(),
    cube: null,
    busy: false,
    error: null,
  };
}

/** A context revision invalidates connections, result and cube. */
export function resetAfterContexts(state: ViewState): void {
  state.connections = null;
  state.chosenConnections = new Set();
  resetAfterConnections(state);
}

export function resetAfterConnections(state: ViewState): void {
  state.rowCount = null;
  state.matchReport = null;
  state.factChoices = new Set();
  state.dimensionChoices = new Set();
  state.cube = null;
}

export function toggle(set: Set<string>, value: string): void {
  if (set.has(value)) {
    set.delete(value);
  } else {
    set.add(value);
  }
}

/** Term pairs the chosen connections cover, straight from the server's
 * grouping (the UI does not recompute connectivity). */
export function uncoveredPairs(state: ViewState): string[] {
  if (!state.connections) {
    return [];
  }
  const missing: string[] = [];
  for (const [pair, ids] of Object.entries(state.connections.groups)) {
    if (!ids.some((id) => state.chosenConnections.has(id))) {
      missing.push(pair);
    }
  }
  return missing;
}

export function selectionPayload(state: ViewState): Record<string, string[]> {
  const payload: Record<string, string[]> = {};
  for (const [term, paths] of state.contextSelections.entries()) {
    if (paths.size > 0) {
      payload[String(term)] = [...paths].sort();
    }
  }
  return payload;
}
