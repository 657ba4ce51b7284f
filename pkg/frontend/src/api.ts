// Thin typed client over the service API. Every console mutation goes
// through these documented endpoints; nothing is computed client-side.

import type {
  ApiErrorBody,
  CandidatesPage,
  FeedbackResult,
  MetricsResponse,
  SuggestionsResponse,
  TierBound,
  TrendDetail,
  TrendSummary,
} from './types.js';

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.status = status;
    this.code = code;
  }
}

type FetchLike = typeof fetch;

export class ServiceClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(base: string, fetchImpl: FetchLike = fetch) {
    this.base = base.replace(/\/+$/, '');
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.base}${path}`, {
      method,
      headers: body === undefined ? undefined : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const parsed = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const err = (parsed ?? {}) as Partial<ApiErrorBody>;
      throw new ApiError(response.status, err.code ?? 'unknown', err.message ?? response.statusText);
    }
    return parsed as T;
  }

  listTrends(): Promise<TrendSummary[]> {
    return this.request('GET', '/trends');
  }

  getTrend(trendId: string): Promise<TrendDetail> {
    return this.request('GET', `/trends/${encodeURIComponent(trendId)}`);
  }

  createTrend(name: string, modality: string, tiers?: TierBound[]): Promise<TrendDetail> {
    return this.request('POST', '/trends', { name, modality, tiers });
  }

  addSeed(trendId: string, itemId: string, annotator: string): Promise<TrendDetail> {
    return this.request('POST', `/trends/${encodeURIComponent(trendId)}/seeds`, {
      item_id: itemId,
      annotator,
    });
  }

  removeSeed(trendId: string, seedId: string): Promise<TrendDetail> {
    return this.request('DELETE', `/trends/${encodeURIComponent(trendId)}/seeds/${encodeURIComponent(seedId)}`);
  }

  pauseTrend(trendId: string): Promise<TrendDetail> {
    return this.request('POST', `/trends/${encodeURIComponent(trendId)}/pause`, {});
  }

  resumeTrend(trendId: string): Promise<TrendDetail> {
    return this.request('POST', `/trends/${encodeURIComponent(trendId)}/resume`, {});
  }

  setTiers(trendId: string, tiers: TierBound[]): Promise<TrendDetail> {
    return this.request('POST', `/trends/${encodeURIComponent(trendId)}/tiers`, { tiers });
  }

  candidates(trendId: string, k = 200, offset = 0, limit = 200): Promise<CandidatesPage> {
    return this.request('GET', `/trends/${encodeURIComponent(trendId)}/candidates?k=${k}&offset=${offset}&limit=${limit}`);
  }

  evaluateTrend(trendId: string, eventTime: number): Promise<{ trend_id: string; decisions_created: number }> {
    return this.request('POST', `/trends/${encodeURIComponent(trendId)}/evaluate`, { event_time: eventTime });
  }

  suggestions(trendId: string, strategy: 'cluster' | 'historical'): Promise<SuggestionsResponse> {
    return this.request('GET', `/trends/${encodeURIComponent(trendId)}/seed-suggestions?strategy=${strategy}`);
  }

  submitLabel(
    trendId: string,
    videoId: string,
    verdict: 'true_positive' | 'false_positive',
    labeler: string,
  ): Promise<FeedbackResult> {
    return this.request('POST', '/feedback', {
      trend_id: trendId,
      video_id: videoId,
      verdict,
      labeler,
    });
  }

  runFeedbackCycle(trendId: string, windowEnd: number, minN: number): Promise<Record<string, unknown>> {
    return this.request('POST', `/trends/${encodeURIComponent(trendId)}/feedback-cycle`, {
      window_end: windowEnd,
      min_n: minN,
    });
  }

  metrics(): Promise<MetricsResponse> {
    return this.request('GET', '/metrics');
  }
}
