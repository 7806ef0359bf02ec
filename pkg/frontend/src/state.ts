// Review screen view state. The one invariant everything maintains:
// the selection is always a subset of the currently listed pending events.

import type { ReviewFilter } from "./filters.js";
import type { EventState, LocalEventTree, ReceiptTree } from "./types.js";

export interface ReviewViewState {
  tab: EventState;
  filter: ReviewFilter;
  selection: Set<string>;
  lastReceipt: ReceiptTree | null;
}

export function initialState(): ReviewViewState {
  return { tab: "pending", filter: {}, selection: new Set(), lastReceipt: null };
}

export function listedPendingIds(events: LocalEventTree[]): string[] {
  return events
    .filter((event) => event.state === "pending")
    .map((event) => event.envelope.metrics.event_id);
}

export function setTab(state: ReviewViewState, tab: EventState): ReviewViewState {
  if (tab === state.tab) return state;
  // the listed set changes wholesale; nothing stays selectable
  return { ...state, tab, selection: new Set() };
}

export function setFilter(state: ReviewViewState, filter: ReviewFilter): ReviewViewState {
  return { ...state, filter, selection: new Set() };
}

/** Reconcile the selection after a list load. */
export function pruneSelection(state: ReviewViewState, events: LocalEventTree[]): ReviewViewState {
  const listed = new Set(listedPendingIds(events));
  const selection = new Set([...state.selection].filter((id) => listed.has(id)));
  return selection.size === state.selection.size ? state : { ...state, selection };
}

export function toggleSelection(
  state: ReviewViewState,
  id: string,
  events: LocalEventTree[],
): ReviewViewState {
  const listed = new Set(listedPendingIds(events));
  const selection = new Set(state.selection);
  if (selection.has(id)) {
    selection.delete(id);
  } else if (listed.has(id)) {
    selection.add(id);
  }
  return { ...state, selection };
}

export function applyReceipt(state: ReviewViewState, receipt: ReceiptTree): ReviewViewState {
  // submitted/duplicate events leave the pending list; the next load prunes
  // them, but clearing now keeps the invariant without waiting for I/O
  return { ...state, selection: new Set(), lastReceipt: receipt };
}
