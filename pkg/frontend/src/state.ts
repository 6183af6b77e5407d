/** Bag-building state and response bookkeeping. Pure logic, no DOM. */

import type { ItemRef, Recommendation } from "./api.js";

export const K_CHOICES = [3, 5, 10] as const;
export const DEFAULT_K = 5;

/**
 * Monotonically increasing request ids; a response is applied only if no
 * newer request has been applied since it was issued. Overlapping network
 * calls therefore resolve in issue order regardless of arrival order.
 */
export class RequestSequencer {
  private issued = 0;
  private applied = 0;

  next(): number {
    return ++this.issued;
  }

  /** True if the response for `id` is still current; marks it applied. */
  accept(id: number): boolean {
    if (id <= this.applied) return false;
    this.applied = id;
    return true;
  }

  get latest(): number {
    return this.issued;
  }
}

export class OrderState {
  readonly selected: ItemRef[] = [];
  suggestions: Recommendation[] = [];
  k: number = DEFAULT_K;
  error: string | null = null;

  has(itemId: string): boolean {
    return this.selected.some((it) => it.item_id === itemId);
  }

  /** Add to the bag; duplicate-free. Returns whether the bag changed. */
  addItem(item: ItemRef): boolean {
    if (this.has(item.item_id)) return false;
    this.selected.push({ item_id: item.item_id, name: item.name });
    // keep the invariant ahead of the refresh round-trip
    this.suggestions = this.suggestions.filter((s) => s.item_id !== item.item_id);
    return true;
  }

  removeItem(itemId: string): boolean {
    const at = this.selected.findIndex((it) => it.item_id === itemId);
    if (at < 0) return false;
    this.selected.splice(at, 1);
    return true;
  }

  setK(k: number): boolean {
    if (!(K_CHOICES as readonly number[]).includes(k) || k === this.k) return false;
    this.k = k;
    return true;
  }

  /** Install a response, dropping anything already selected (invariant:
   * suggestions never contain a selected item). Order is preserved. */
  applySuggestions(recommendations: Recommendation[]): void {
    this.suggestions = recommendations.filter((r) => !this.has(r.item_id));
  }

  clearSuggestions(): void {
    this.suggestions = [];
  }
}
