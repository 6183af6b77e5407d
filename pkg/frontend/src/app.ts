/** Order-entry panel: a bag of selected tests with typeahead on the left,
 * live next-test suggestions on the right.
 *
 * Contract with the service:
 *   - every bag mutation (add, remove, k change) issues exactly one
 *     recommendation refresh; an empty bag never issues one,
 *   - responses are applied only if no newer request has been applied
 *     (monotonic request ids), so overlapping calls cannot go backwards,
 *   - rendered suggestion order is the response order, untouched,
 *   - request failures raise a banner and leave the bag alone.
 */

import { ApiError, ServiceClient } from "./api.js";
import type { ItemRef } from "./api.js";
import { debounce } from "./debounce.js";
import { K_CHOICES, OrderState, RequestSequencer } from "./state.js";

export interface AppOptions {
  /** Typeahead settle time; tests pass 0. */
  debounceMs?: number;
  searchLimit?: number;
}

export interface AppHandle {
  root: HTMLElement;
  state: OrderState;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function createApp(
  root: HTMLElement,
  client: ServiceClient,
  options: AppOptions = {},
): AppHandle {
  const state = new OrderState();
  const searchSeq = new RequestSequencer();
  const recSeq = new RequestSequencer();
  const searchLimit = options.searchLimit ?? 20;

  root.innerHTML = "";
  root.classList.add("labrec-app");

  const banner = el("div", "banner");
  banner.hidden = true;

  const modelLine = el("div", "model-info");

  const header = el("header");
  header.appendChild(el("h1", undefined, "Lab order entry"));
  header.appendChild(modelLine);

  const bagList = el("div", "bag");
  const input = el("input", "search") as HTMLInputElement;
  input.type = "text";
  input.placeholder = "Add a test by name or id";
  input.autocomplete = "off";
  const dropdown = el("ul", "dropdown");
  dropdown.hidden = true;

  const orderSection = el("section", "order");
  orderSection.appendChild(el("h2", undefined, "Current order"));
  orderSection.appendChild(bagList);
  orderSection.appendChild(input);
  orderSection.appendChild(dropdown);

  const kSelect = el("select", "k-select") as HTMLSelectElement;
  for (const choice of K_CHOICES) {
    const option = el("option", undefined, String(choice)) as HTMLOptionElement;
    option.value = String(choice);
    option.selected = choice === state.k;
    kSelect.appendChild(option);
  }

  const panelHead = el("div", "panel-head");
  panelHead.appendChild(el("h2", undefined, "Suggested next tests"));
  panelHead.appendChild(kSelect);

  const suggestionList = el("ol", "suggestions");
  const emptyNote = el("p", "empty-note", "Add a test to see suggestions.");

  const panelSection = el("section", "panel");
  panelSection.appendChild(panelHead);
  panelSection.appendChild(suggestionList);
  panelSection.appendChild(emptyNote);

  root.appendChild(header);
  root.appendChild(banner);
  root.appendChild(orderSection);
  root.appendChild(panelSection);

  function renderBanner(): void {
    banner.hidden = state.error === null;
    banner.textContent = state.error ?? "";
  }

  function renderBag(): void {
    bagList.innerHTML = "";
    for (const item of state.selected) {
      const chip = el("span", "chip");
      chip.dataset.itemId = item.item_id;
      chip.appendChild(el("span", "chip-name", item.name));
      const remove = el("button", "chip-remove", "×");
      remove.type = "button";
      remove.title = `Remove ${item.name}`;
      remove.addEventListener("click", () => removeItem(item.item_id));
      chip.appendChild(remove);
      bagList.appendChild(chip);
    }
  }

  function renderSuggestions(): void {
    suggestionList.innerHTML = "";
    for (const rec of state.suggestions) {
      const row = el("li", "suggestion");
      row.dataset.itemId = rec.item_id;
      const button = el("button", "suggestion-add");
      button.type = "button";
      button.appendChild(el("span", "suggestion-name", rec.name));
      button.appendChild(el("span", "suggestion-score", `${Math.round(rec.score * 100)}%`));
      button.addEventListener("click", () => addItem(rec));
      row.appendChild(button);
      suggestionList.appendChild(row);
    }
    emptyNote.hidden = state.selected.length > 0;
  }

  function renderDropdown(items: ItemRef[]): void {
    dropdown.innerHTML = "";
    for (const item of items) {
      const row = el("li", "dropdown-item", item.name);
      row.dataset.itemId = item.item_id;
      row.addEventListener("click", () => {
        clearDropdown();
        input.value = "";
        addItem(item);
      });
      dropdown.appendChild(row);
    }
    dropdown.hidden = items.length === 0;
  }

  function clearDropdown(): void {
    dropdown.innerHTML = "";
    dropdown.hidden = true;
  }

  function fail(err: unknown): void {
    state.error = err instanceof ApiError ? `${err.code}: ${err.message}` : "service unreachable";
    renderBanner();
  }

  async function performSearch(q: string): Promise<void> {
    const id = searchSeq.next();
    try {
      const items = await client.searchItems(q, searchLimit);
      if (!searchSeq.accept(id)) return;
      // the box may have been cleared or retyped while in flight
      if (input.value.trim() !== q) return;
      renderDropdown(items);
    } catch (err) {
      if (searchSeq.accept(id)) fail(err);
    }
  }

  const debouncedSearch = debounce((q: string) => {
    void performSearch(q);
  }, options.debounceMs ?? 200);

  async function refresh(): Promise<void> {
    if (state.selected.length === 0) return; // an empty query is never sent
    const id = recSeq.next();
    try {
      const response = await client.recommend(
        state.selected.map((it) => it.item_id),
        state.k,
      );
      if (!recSeq.accept(id)) return;
      state.applySuggestions(response.recommendations);
      state.error = null;
      renderSuggestions();
      renderBanner();
    } catch (err) {
      if (recSeq.accept(id)) fail(err);
    }
  }

  function addItem(item: ItemRef): void {
    if (!state.addItem(item)) return;
    renderBag();
    renderSuggestions();
    void refresh();
  }

  function removeItem(itemId: string): void {
    if (!state.removeItem(itemId)) return;
    renderBag();
    if (state.selected.length === 0) {
      state.clearSuggestions();
      renderSuggestions();
      return;
    }
    void refresh();
  }

  input.addEventListener("input", () => {
    const q = input.value.trim();
    if (q === "") {
      debouncedSearch.cancel();
      clearDropdown();
      return;
    }
    debouncedSearch(q);
  });

  kSelect.addEventListener("change", () => {
    if (!state.setK(Number(kSelect.value))) return;
    void refresh();
  });

  void client
    .modelInfo()
    .then((info) => {
      modelLine.textContent =
        `${info.metric} neighbourhood, s=${info.s} · ` +
        `${info.m} training orders · ${info.n} items`;
    })
    .catch(fail);

  renderBag();
  renderSuggestions();
  return { root, state };
}
