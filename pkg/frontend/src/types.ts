// Wire shapes of the local agent endpoint and the collector API.

export interface AgentTree {
  code_name: string;
  full_name: string;
  secret_key: string;
  install_guid: string;
}

export interface EnvelopeTree {
  timestamp: string;
  agent: AgentTree;
  metrics: { event_id: string; event_type: string; [key: string]: unknown };
}

export type EventState = "pending" | "submitted";

export interface LocalEventTree {
  envelope: EnvelopeTree;
  state: EventState;
  created_at: string;
  submitted_at: string | null;
  last_error: { kind: string; path: string; message: string }[] | null;
}

export interface RejectedItemTree {
  index: number;
  errors: { kind: string; path: string; message: string }[];
}

export interface ReceiptTree {
  accepted: number;
  duplicates: number;
  rejected: RejectedItemTree[];
}

export interface AgentStatusTree {
  collecting: boolean;
  pending: number;
  submitted: number;
}

export interface BucketTree {
  label: string;
  count: number;
  total_duration_s: number;
}

export interface SeriesTree {
  dimension: string;
  buckets: BucketTree[];
}

export interface StatsTree {
  record_count: number;
  partitions: unknown[];
}

export type BreakdownDimension = "event_type" | "application" | "host";
