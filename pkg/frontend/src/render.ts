// HTML renderers for the review screen (pure string -> easy to test).

import type { LocalEventTree, ReceiptTree } from "./types.js";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** First few string leaves of the metrics tree (values only, reserved keys
 * skipped) — the human-scannable gist of an event. */
export function leafPreview(metrics: Record<string, unknown>, limit = 3): string {
  const leaves: string[] = [];
  const walk = (node: unknown): void => {
    if (leaves.length >= limit) return;
    if (typeof node === "string") {
      leaves.push(node);
    } else if (Array.isArray(node)) {
      node.forEach(walk);
    } else if (node !== null && typeof node === "object") {
      for (const value of Object.values(node as Record<string, unknown>)) walk(value);
    }
  };
  for (const [key, value] of Object.entries(metrics)) {
    if (key === "event_id" || key === "event_type") continue;
    walk(value);
  }
  const joined = leaves.join(", ");
  return joined.length > 80 ? `${joined.slice(0, 77)}...` : joined;
}

export function eventRow(event: LocalEventTree, selected: boolean): string {
  const id = event.envelope.metrics.event_id;
  const application = event.envelope.metrics["application"];
  const checkbox =
    event.state === "pending"
      ? `<input type="checkbox" class="select-event" data-id="${esc(id)}"${selected ? " checked" : ""}>`
      : "";
  const error = event.last_error
    ? `<span class="event-error" title="${esc(event.last_error.map((e) => e.kind).join(", "))}">!</span>`
    : "";
  return (
    `<tr data-id="${esc(id)}" data-state="${event.state}">` +
    `<td class="col-select">${checkbox}</td>` +
    `<td class="col-time">${esc(event.envelope.timestamp)}</td>` +
    `<td class="col-type">${esc(event.envelope.metrics.event_type)}</td>` +
    `<td class="col-app">${typeof application === "string" ? esc(application) : "-"}</td>` +
    `<td class="col-preview">${esc(leafPreview(event.envelope.metrics))}${error}</td>` +
    `</tr>`
  );
}

export function eventTable(events: LocalEventTree[], selection: Set<string>): string {
  if (events.length === 0) {
    return `<p class="empty-note">no events match</p>`;
  }
  const rows = events
    .map((event) => eventRow(event, selection.has(event.envelope.metrics.event_id)))
    .join("");
  return (
    `<table id="events-table"><thead><tr>` +
    `<th></th><th>timestamp</th><th>type</th><th>application</th><th>preview</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function receiptLine(receipt: ReceiptTree): string {
  const rejected = receipt.rejected.length;
  const detail = receipt.rejected
    .map((item) => `#${item.index}: ${item.errors.map((e) => e.kind).join("/")}`)
    .join("; ");
  return (
    `accepted ${receipt.accepted}, duplicates ${receipt.duplicates}, rejected ${rejected}` +
    (rejected ? ` (${esc(detail)})` : "")
  );
}
