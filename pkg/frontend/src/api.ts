// Thin typed clients over fetch. Both take the fetch function as a
// dependency so tests can route requests at recorded fixtures.

import type { ReviewFilter } from "./filters.js";
import { filterQuery } from "./filters.js";
import type {
  AgentStatusTree,
  BreakdownDimension,
  LocalEventTree,
  ReceiptTree,
  SeriesTree,
  StatsTree,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function readJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = `${response.status}`;
    try {
      const body = (await response.json()) as { error?: string };
      if (body.error) detail = `${response.status}: ${body.error}`;
    } catch {
      // non-JSON error body; keep the status
    }
    throw new ApiError(detail, response.status);
  }
  return (await response.json()) as T;
}

/** Client for the local agent review endpoint (/local/*). */
export class AgentApi {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async events(filter: ReviewFilter): Promise<LocalEventTree[]> {
    const query = filterQuery(filter);
    const url = `${this.baseUrl}/local/events${query ? `?${query}` : ""}`;
    const body = await readJson<{ events: LocalEventTree[] }>(await this.fetchFn(url));
    return body.events;
  }

  async submit(ids: string[]): Promise<ReceiptTree> {
    const response = await this.fetchFn(`${this.baseUrl}/local/submit`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ ids }),
    });
    return readJson<ReceiptTree>(response);
  }

  async status(): Promise<AgentStatusTree> {
    return readJson<AgentStatusTree>(await this.fetchFn(`${this.baseUrl}/local/status`));
  }

  async setCollecting(collecting: boolean): Promise<AgentStatusTree> {
    const response = await this.fetchFn(`${this.baseUrl}/local/collection`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ collecting }),
    });
    return readJson<AgentStatusTree>(response);
  }
}

/** Client for the collector's reader endpoints. */
export class CollectorApi {
  constructor(
    readonly baseUrl: string,
    readonly readerKey: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private get headers(): Record<string, string> {
    return { "X-Secret-Key": this.readerKey };
  }

  async overTime(from: string, to: string): Promise<SeriesTree> {
    const params = new URLSearchParams({ from, to });
    return readJson<SeriesTree>(
      await this.fetchFn(`${this.baseUrl}/api/v1/analytics/over-time?${params}`, {
        headers: this.headers,
      }),
    );
  }

  async breakdown(dimension: BreakdownDimension, from: string, to: string): Promise<SeriesTree> {
    const params = new URLSearchParams({ dimension, from, to });
    return readJson<SeriesTree>(
      await this.fetchFn(`${this.baseUrl}/api/v1/analytics/breakdown?${params}`, {
        headers: this.headers,
      }),
    );
  }

  async stats(): Promise<StatsTree> {
    return readJson<StatsTree>(
      await this.fetchFn(`${this.baseUrl}/api/v1/stats`, { headers: this.headers }),
    );
  }
}
