/** Top-k results table; every figure shown comes from the service. */

import type { ViewState } from "../state.js";

export function resultsPanel(state: ViewState): HTMLElement {
  const panel = document.createElement("section");
  panel.id = "results-panel";
  const heading = document.createElement("h2");
  heading.textContent = "Top-k results";
  panel.append(heading);
  if (!state.topk) {
    const empty = document.createElement("p");
    empty.className = "notice";
    empty.textContent = "Run a query to see results.";
    panel.append(empty);
    return panel;
  }
  const count = document.createElement("p");
  count.id = "topk-count";
  count.dataset.count = String(state.topk.tuples.length);
  count.textContent = `${state.topk.tuples.length} tuples (k=${state.topk.k})`;
  panel.append(count);
  const table = document.createElement("table");
  table.id = "topk-table";
  const header = document.createElement("tr");
  const m = state.topk.tuples[0]?.nodes.length ?? 0;
  const columns = ["#", "score", "distance"];
  for (let i = 1; i <= m; i += 1) {
    columns.push(`node ${i}`, `path ${i}`);
  }
  for (const column of columns) {
    const th = document.createElement("th");
    th.textContent = column;
    header.append(th);
  }
  table.append(header);
  state.topk.tuples.forEach((tuple, rank) => {
    const row = document.createElement("tr");
    const cells = [String(rank + 1), tuple.score.toFixed(4), String(tuple.distance)];
    tuple.nodes.forEach((node, i) => {
      cells.push(node, tuple.paths[i] ?? "");
    });
    for (const cell of cells) {
      const td = document.createElement("td");
      td.textContent = cell;
      row.append(td);
    }
    table.append(row);
  });
  panel.append(table);
  return panel;
}
