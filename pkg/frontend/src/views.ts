// View-model assembly. Every number shown on screen is a service response
// field copied through unchanged; formatting is display-only.

import type { SeedRow, TierBound, TrendDetail } from './types.js';

export interface SeedViewRow {
  itemId: string;
  provenance: string;
  n: number;
  r: number;
  precisionText: string; // the service's value, rendered; "-" when null
}

export interface TrendViewModel {
  trendId: string;
  name: string;
  state: string;
  modality: string;
  seeds: SeedViewRow[];
  tiers: TierBound[];
}

export function formatPrecision(value: number | null): string {
  return value === null ? '-' : value.toFixed(3);
}

export function seedRow(seed: SeedRow): SeedViewRow {
  return {
    itemId: seed.item_id,
    provenance: seed.provenance,
    n: seed.n,
    r: seed.r,
    precisionText: formatPrecision(seed.precision),
  };
}

export function trendView(detail: TrendDetail): TrendViewModel {
  return {
    trendId: detail.trend_id,
    name: detail.name,
    state: detail.state,
    modality: detail.modality,
    seeds: detail.seeds.map(seedRow),
    tiers: detail.tiers,
  };
}
