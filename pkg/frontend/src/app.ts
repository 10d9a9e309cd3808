/** Wires the panels to the session service. One session per mount; every
 * action round-trips through the server before the view updates. */

import { ApiClient, ApiError, type FetchLike } from "./api.js";
import {
  initialState,
  resetAfterConnections,
  resetAfterContexts,
  selectionPayload,
  toggle,
  type ViewState,
} from "./state.js";
import { connectionsPanel } from "./panels/connections.js";
import { contextsPanel } from "./panels/contexts.js";
import { cubePanel } from "./panels/cube.js";
import { queryPanel } from "./panels/query.js";
import { resultsPanel } from "./panels/results.js";
import type { NewDefinition } from "./types.js";

export interface AppOptions {
  baseUrl?: string;
  fetchFn?: FetchLike;
}

export class App {
  readonly state: ViewState = initialState();
  private readonly api: ApiClient;
  private rendering = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    options: AppOptions = {},
  ) {
    this.api = new ApiClient(options.baseUrl ?? "", options.fetchFn);
    this.render();
  }

  /** Resolves when in-flight handlers have settled (used by tests). */
  idle(): Promise<void> {
    return this.rendering.then(() => undefined);
  }

  private run(task: () => Promise<void>): void {
    this.rendering = this.rendering.then(async () => {
      this.state.busy = true;
      this.state.error = null;
      this.render();
      try {
        await task();
      } catch (error) {
        this.state.error =
          error instanceof ApiError
            ? `${error.status}: ${error.message}`
            : String(error);
      } finally {
        this.state.busy = false;
        this.render();
      }
    });
  }

  private render(): void {
    const state = this.state;
    this.root.textContent = "";
    this.root.append(
      queryPanel(state, { onSubmit: (text) => this.submitQuery(text) }),
      resultsPanel(state),
      contextsPanel(state, {
        onToggle: (term, path) => this.toggleContext(term, path),
        onApply: () => this.applyContexts(),
      }),
      connectionsPanel(state, {
        onToggle: (id) => this.toggleConnection(id),
        onMaterialize: () => this.materialize(),
      }),
      cubePanel(state, {
        onToggleFact: (name) => {
          toggle(state.factChoices, name);
          this.render();
        },
        onToggleDimension: (name) => {
          toggle(state.dimensionChoices, name);
          this.render();
        },
        onDefine: (definition) => this.defineEntry(definition),
        onBuild: () => this.buildCube(),
        tableUrl: (path) => this.api.tableUrl(path),
      }),
    );
  }

  submitQuery(text: string): void {
    this.run(async () => {
      const created = await this.api.createSession(text);
      const state = this.state;
      state.queryText = text;
      state.sessionId = created.session_id;
      state.topk = created.topk;
      state.buckets = created.context_buckets;
      state.contextSelections = new Map();
      resetAfterContexts(state);
    });
  }

  toggleContext(term: number, path: string): void {
    const chosen = this.state.contextSelections.get(term) ?? new Set<string>();
    toggle(chosen, path);
    this.state.contextSelections.set(term, chosen);
    this.render();
  }

  applyContexts(): void {
    this.run(async () => {
      const state = this.state;
      if (!state.sessionId) {
        return;
      }
      const applied = await this.api.selectContexts(
        state.sessionId,
        selectionPayload(state),
      );
      state.topk = applied.topk;
      state.connections = applied.connections;
      state.chosenConnections = new Set();
      resetAfterConnections(state);
    });
  }

  toggleConnection(id: string): void {
    const state = this.state;
    toggle(state.chosenConnections, id);
    resetAfterConnections(state);
    this.run(async () => {
      if (!state.sessionId) {
        return;
      }
      await this.api.selectConnections(state.sessionId, [...state.chosenConnections].sort());
    });
  }

  materialize(): void {
    this.run(async () => {
      const state = this.state;
      if (!state.sessionId) {
        return;
      }
      const result = await this.api.materialize(state.sessionId);
      state.rowCount = result.row_count;
      state.matchReport = await this.api.match(state.sessionId);
      state.catalog = await this.api.catalog();
      state.factChoices = new Set(state.matchReport.facts_matched);
      state.dimensionChoices = new Set(state.matchReport.dimensions_matched);
    });
  }

  defineEntry(definition: NewDefinition): void {
    this.run(async () => {
      const state = this.state;
      if (!state.sessionId) {
        return;
      }
      state.matchReport = await this.api.defineEntry(state.sessionId, definition);
      state.catalog = await this.api.catalog();
    });
  }

  buildCube(): void {
    this.run(async () => {
      const state = this.state;
      if (!state.sessionId) {
        return;
      }
      state.cube = await this.api.buildCube(
        state.sessionId,
        [...state.factChoices].sort(),
        [...state.dimensionChoices].sort(),
      );
    });
  }
}

export function mountApp(root: HTMLElement, options: AppOptions = {}): App {
  return new App(root, options);
}

declare global {
  interface Window {
    searchcubeApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.searchcubeApp = mountApp(document.getElementById("app")!);
}
