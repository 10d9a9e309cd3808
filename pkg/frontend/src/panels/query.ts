/** Query panel: the free-form (context, search) term editor. */

import type { ViewState } from "../state.js";

export interface QueryActions {
  onSubmit(text: string): void;
}

export function queryPanel(state: ViewState, actions: QueryActions): HTMLElement {
  const panel = document.createElement("section");
  panel.id = "query-panel";
  panel.innerHTML = `
    <h2>Query</h2>
    <input id="query-input" type="text" size="70"
           placeholder='(*, "United States") AND (trade country, *) AND (percentage, *)' />
    <button id="query-submit">Search</button>
  `;
  const input = panel.querySelector<HTMLInputElement>("#query-input")!;
  input.value = state.queryText;
  const button = panel.querySelector<HTMLButtonElement>("#query-submit")!;
  button.disabled = state.busy;
  button.addEventListener("click", () => actions.onSubmit(input.value));
  if (state.error) {
    const note = document.createElement("p");
    note.className = "error";
    note.id = "error-box";
    note.textContent = state.error;
    panel.append(note);
  }
  return panel;
}
