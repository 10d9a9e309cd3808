/** Context summary panel: one checklist per term, entries in the
 * server's frequency order, counts straight from the response. */

import type { ViewState } from "../state.js";

export interface ContextActions {
  onToggle(term: number, path: string): void;
  onApply(): void;
}

export function contextsPanel(state: ViewState, actions: ContextActions): HTMLElement {
  const panel = document.createElement("section");
  panel.id = "contexts-panel";
  const heading = document.createElement("h2");
  heading.textContent = "Context summary";
  panel.append(heading);
  if (!state.buckets) {
    const empty = document.createElement("p");
    empty.className = "notice";
    empty.textContent = "Contexts appear after a query runs.";
    panel.append(empty);
    return panel;
  }
  for (const bucket of state.buckets) {
    const box = document.createElement("fieldset");
    box.className = "bucket";
    box.dataset.term = String(bucket.term);
    const legend = document.createElement("legend");
    legend.textContent = `term ${bucket.term}`;
    box.append(legend);
    if (bucket.entries.length === 0) {
      box.classList.add("disabled");
      const note = document.createElement("p");
      note.className = "notice";
      note.textContent = "no matching contexts";
      box.append(note);
      panel.append(box);
      continue;
    }
    for (const entry of bucket.entries) {
      const label = document.createElement("label");
      label.className = "context-entry";
      const checkbox = document.createElement("input");
      checkbox.type = "checkbox";
      checkbox.dataset.term = String(bucket.term);
      checkbox.dataset.path = entry.path;
      checkbox.checked =
        state.contextSelections.get(bucket.term)?.has(entry.path) ?? false;
      checkbox.addEventListener("change", () =>
        actions.onToggle(bucket.term, entry.path),
      );
      const text = document.createElement("span");
      text.textContent = ` ${entry.path} `;
      const counts = document.createElement("small");
      counts.dataset.docs = String(entry.doc_frequency);
      counts.dataset.matches = String(entry.occurrence);
      counts.textContent = `docs=${entry.doc_frequency} matches=${entry.occurrence}`;
      label.append(checkbox, text, counts);
      box.append(label);
    }
    panel.append(box);
  }
  const apply = document.createElement("button");
  apply.id = "apply-contexts";
  apply.textContent = "Apply contexts";
  apply.disabled = state.busy || state.sessionId === null;
  apply.addEventListener("click", () => actions.onApply());
  panel.append(apply);
  return panel;
}
