/** Cube designer: catalog pulldowns with the matched facts/dimensions
 * highlighted, a new-definition form (keys verified server-side), and the
 * build button with table download links. */

import type { ViewState } from "../state.js";
import type { NewDefinition } from "../types.js";

export interface CubeActions {
  onToggleFact(name: string): void;
  onToggleDimension(name: string): void;
  onDefine(definition: NewDefinition): void;
  onBuild(): void;
  tableUrl(path: string): string;
}

function catalogList(
  state: ViewState,
  kind: "fact" | "dimension",
  matched: string[],
  chosen: Set<string>,
  onToggle: (name: string) => void,
): HTMLElement {
  const box = document.createElement("fieldset");
  box.className = `catalog-${kind}`;
  const legend = document.createElement("legend");
  legend.textContent = kind === "fact" ? "measures (facts)" : "dimensions";
  box.append(legend);
  const entries = kind === "fact" ? state.catalog!.facts : state.catalog!.dimensions;
  for (const entry of entries) {
    const label = document.createElement("label");
    label.className = "catalog-entry";
    label.dataset.kind = kind;
    label.dataset.name = entry.name;
    if (matched.includes(entry.name)) {
      label.classList.add("matched");
    }
    const checkbox = document.createElement("input");
    checkbox.type = "checkbox";
    checkbox.checked = chosen.has(entry.name);
    checkbox.addEventListener("change", () => onToggle(entry.name));
    const text = document.createElement("span");
    text.textContent = ` ${entry.name}`;
    label.append(checkbox, text);
    box.append(label);
  }
  return box;
}

export function cubePanel(state: ViewState, actions: CubeActions): HTMLElement {
  const panel = document.createElement("section");
  panel.id = "cube-panel";
  const heading = document.createElement("h2");
  heading.textContent = "Cube designer";
  panel.append(heading);
  if (state.rowCount === null || !state.matchReport || !state.catalog) {
    const empty = document.createElement("p");
    empty.className = "notice";
    empty.textContent = "Materialize the result to design a cube.";
    panel.append(empty);
    return panel;
  }
  for (const warning of state.matchReport.warnings) {
    const note = document.createElement("p");
    note.className = "warning";
    note.textContent = warning;
    panel.append(note);
  }
  panel.append(
    catalogList(
      state,
      "fact",
      state.matchReport.facts_matched,
      state.factChoices,
      actions.onToggleFact,
    ),
  );
  panel.append(
    catalogList(
      state,
      "dimension",
      state.matchReport.dimensions_matched,
      state.dimensionChoices,
      actions.onToggleDimension,
    ),
  );

  const form = document.createElement("details");
  form.id = "define-form";
  form.innerHTML = `
    <summary>Define a new fact or dimension from a column</summary>
    <label>kind
      <select id="def-kind"><option value="fact">fact</option>
      <option value="dimension">dimension</option></select>
    </label>
    <label>name <input id="def-name" type="text" /></label>
    <label>column <input id="def-column" type="number" value="0" min="0" /></label>
    <label>context <input id="def-context" type="text" size="50" /></label>
    <label>keys (comma separated) <input id="def-keys" type="text" size="50" /></label>
    <button id="def-submit">Verify and add</button>
  `;
  form.querySelector<HTMLButtonElement>("#def-submit")!.addEventListener("click", () => {
    const kind = form.querySelector<HTMLSelectElement>("#def-kind")!.value as
      | "fact"
      | "dimension";
    const name = form.querySelector<HTMLInputElement>("#def-name")!.value.trim();
    const column = Number(form.querySelector<HTMLInputElement>("#def-column")!.value);
    const context = form.querySelector<HTMLInputElement>("#def-context")!.value.trim();
    const keys = form
      .querySelector<HTMLInputElement>("#def-keys")!
      .value.split(",")
      .map((k) => k.trim())
      .filter((k) => k.length > 0);
    actions.onDefine({ kind, name, column, contexts: [{ context, key: keys }] });
  });
  panel.append(form);

  const build = document.createElement("button");
  build.id = "build-cube";
  build.textContent = "Build cube";
  build.disabled = state.busy;
  build.addEventListener("click", () => actions.onBuild());
  panel.append(build);

  if (state.cube) {
    const tables = document.createElement("ul");
    tables.id = "cube-tables";
    for (const table of state.cube.manifest.tables) {
      const item = document.createElement("li");
      item.dataset.rows = String(table.rows);
      item.dataset.file = table.file;
      const link = document.createElement("a");
      const href = state.cube.tables[table.file];
      link.href = href ? actions.tableUrl(href) : "#";
      link.textContent = table.file;
      link.setAttribute("download", table.file);
      item.append(link, ` (${table.kind}, ${table.rows} rows)`);
      tables.append(item);
    }
    panel.append(tables);
  }
  return panel;
}
