// JSON shapes of the service API. Field names mirror the wire format
// exactly: the console displays service values verbatim, never recomputed.

export interface TierBound {
  name: 'flag_review' | 'restrict' | 'escalate';
  lower_bound: number;
}

export interface SeedRow {
  item_id: string;
  provenance: string;
  n: number;
  r: number;
  precision: number | null;
}

export interface TrendSummary {
  trend_id: string;
  name: string;
  modality: string;
  state: 'active' | 'paused' | 'retired';
  seed_count: number;
  created_at: number;
}

export interface TrendDetail extends TrendSummary {
  seeds: SeedRow[];
  tiers: TierBound[];
  window_end: number;
}

export interface Candidate {
  video_id: string;
  score: number;
  best_seed_id: string;
  tier: string | null;
  decided_tier: string | null;
  has_decision: boolean;
  label: string | null;
}

export interface CandidatesPage {
  trend_id: string;
  k: number;
  offset: number;
  candidates: Candidate[];
}

export interface FeedbackResult {
  video_id: string;
  trend_id: string;
  seed_id: string;
  n: number;
  r: number;
  precision: number | null;
}

export interface SeedSuggestion {
  item_id: string;
  provenance: string;
  cluster_size?: number;
  precision?: number;
}

export interface SuggestionsResponse {
  trend_id: string;
  strategy: string;
  suggestions: SeedSuggestion[];
}

export interface MetricsResponse {
  trends: Record<string, unknown>;
  totals: { videos: number; events: number; action_counts: Record<string, number> };
  feedback_history: Array<{ seq: number; kind: string; event_time: number; payload: Record<string, unknown> }>;
  latency: { count: number; p50_ms: number | null; p99_ms: number | null };
  state_hash: string;
}

export interface ApiErrorBody {
  http_status: number;
  code: string;
  message: string;
}
