/** Connection panel: the summarized routes as a small graph (context
 * paths as nodes, connections as labeled edges) plus pick/drop toggles.
 * Materialize unlocks only when every term pair has a chosen connection,
 * which is read off the server's own pair grouping. */

import { uncoveredPairs, type ViewState } from "../state.js";

export interface ConnectionActions {
  onToggle(id: string): void;
  onMaterialize(): void;
}

function leaf(path: string): string {
  const parts = path.split("/").filter((p) => p.length > 0);
  return parts[parts.length - 1] ?? path;
}

function buildGraph(state: ViewState): SVGSVGElement {
  const svgNs = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(svgNs, "svg");
  svg.setAttribute("id", "connection-graph");
  const endpoints = new Set<string>();
  const connections = state.connections!;
  for (const conn of Object.values(connections.connections)) {
    endpoints.add(conn.endpoints[0]);
    endpoints.add(conn.endpoints[1]);
  }
  const ordered = [...endpoints].sort();
  const width = 640;
  const height = 80 + ordered.length * 46;
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("width", String(width));
  const position = new Map<string, { x: number; y: number }>();
  ordered.forEach((path, i) => {
    position.set(path, { x: i % 2 === 0 ? 140 : 500, y: 50 + i * 44 });
  });
  Object.entries(connections.connections).forEach(([id, conn], index) => {
    const a = position.get(conn.endpoints[0])!;
    const b = position.get(conn.endpoints[1])!;
    const line = document.createElementNS(svgNs, "path");
    const bend = 18 * (index % 5);
    const mx = (a.x + b.x) / 2;
    const my = (a.y + b.y) / 2 - bend;
    line.setAttribute("d", `M ${a.x} ${a.y} Q ${mx} ${my} ${b.x} ${b.y}`);
    line.setAttribute("class", state.chosenConnections.has(id) ? "edge chosen" : "edge");
    line.dataset.connection = id;
    svg.append(line);
    const label = document.createElementNS(svgNs, "text");
    label.setAttribute("x", String(mx));
    label.setAttribute("y", String(my));
    label.setAttribute("class", "edge-label");
    label.textContent = `${conn.render} (${conn.length})`;
    svg.append(label);
  });
  for (const [path, pos] of position.entries()) {
    const circle = document.createElementNS(svgNs, "circle");
    circle.setAttribute("cx", String(pos.x));
    circle.setAttribute("cy", String(pos.y));
    circle.setAttribute("r", "7");
    circle.setAttribute("class", "endpoint");
    svg.append(circle);
    const text = document.createElementNS(svgNs, "text");
    text.setAttribute("x", String(pos.x));
    text.setAttribute("y", String(pos.y - 12));
    text.setAttribute("class", "endpoint-label");
    text.textContent = leaf(path);
    svg.append(text);
  }
  return svg;
}

export function connectionsPanel(
  state: ViewState,
  actions: ConnectionActions,
): HTMLElement {
  const panel = document.createElement("section");
  panel.id = "connections-panel";
  const heading = document.createElement("h2");
  heading.textContent = "Connection summary";
  panel.append(heading);
  if (!state.connections) {
    const empty = document.createElement("p");
    empty.className = "notice";
    empty.textContent = "Apply context selections to see connections.";
    panel.append(empty);
    return panel;
  }
  panel.append(buildGraph(state));
  for (const [pair, ids] of Object.entries(state.connections.groups).sort()) {
    const box = document.createElement("fieldset");
    box.className = "pair";
    box.dataset.pair = pair;
    const legend = document.createElement("legend");
    legend.textContent = `terms ${pair}`;
    box.append(legend);
    for (const id of ids) {
      const conn = state.connections.connections[id];
      if (!conn) {
        continue;
      }
      const label = document.createElement("label");
      label.className = "connection-entry";
      const checkbox = document.createElement("input");
      checkbox.type = "checkbox";
      checkbox.dataset.connection = id;
      checkbox.checked = state.chosenConnections.has(id);
      checkbox.addEventListener("change", () => actions.onToggle(id));
      const text = document.createElement("span");
      text.textContent = ` ${conn.render} (${conn.length} steps, seen in ${conn.tuples.length} tuples)`;
      label.append(checkbox, text);
      box.append(label);
    }
    panel.append(box);
  }
  const missing = uncoveredPairs(state);
  const button = document.createElement("button");
  button.id = "materialize";
  button.textContent = "Materialize complete result";
  button.disabled = state.busy || missing.length > 0;
  button.addEventListener("click", () => actions.onMaterialize());
  panel.append(button);
  if (missing.length > 0) {
    const why = document.createElement("p");
    why.className = "notice";
    why.id = "uncovered-pairs";
    why.textContent = `pick a connection for term pairs: ${missing.join(", ")}`;
    panel.append(why);
  }
  if (state.rowCount !== null) {
    const rows = document.createElement("p");
    rows.id = "row-count";
    rows.dataset.count = String(state.rowCount);
    rows.textContent = `complete result: ${state.rowCount} rows`;
    panel.append(rows);
  }
  return panel;
}
