// Review filter construction. The query grammar is exactly the agent
// endpoint's: keyword, application, from, to, state — nothing else, and the
// UI never post-filters on top of what the endpoint returns.

import type { EventState } from "./types.js";

export interface ReviewFilter {
  keyword?: string;
  application?: string;
  from?: string; // ISO instant, inclusive
  to?: string; // ISO instant, exclusive
  state?: EventState;
}

/** Turn a date-picker value (YYYY-MM-DD) into the API's instant form. */
export function dayStart(day: string): string {
  return `${day}T00:00:00.000Z`;
}

export function filterQuery(filter: ReviewFilter): string {
  const params = new URLSearchParams();
  if (filter.keyword) params.set("keyword", filter.keyword);
  if (filter.application) params.set("application", filter.application);
  if (filter.from) params.set("from", filter.from);
  if (filter.to) params.set("to", filter.to);
  if (filter.state) params.set("state", filter.state);
  return params.toString();
}
