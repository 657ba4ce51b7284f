// Client-side tier validation: an ordering violation is blocked with an
// explanation before any request is made. The server re-validates and
// stays authoritative.

import type { TierBound } from './types.js';

export const TIER_ORDER = ['flag_review', 'restrict', 'escalate'] as const;

export interface ValidationResult {
  ok: boolean;
  reason?: string;
}

export function validateTierEdit(tiers: TierBound[]): ValidationResult {
  if (tiers.length === 0) {
    return { ok: false, reason: 'at least one tier is required' };
  }
  const seen = new Set<string>();
  for (const tier of tiers) {
    if (!TIER_ORDER.includes(tier.name)) {
      return { ok: false, reason: `unknown tier "${tier.name}"` };
    }
    if (seen.has(tier.name)) {
      return { ok: false, reason: `duplicate tier "${tier.name}"` };
    }
    seen.add(tier.name);
    if (tier.lower_bound < -1 || tier.lower_bound > 1) {
      return { ok: false, reason: `${tier.name} bound ${tier.lower_bound} is outside [-1, 1]` };
    }
  }
  const ordered = TIER_ORDER.filter((name) => seen.has(name)).map(
    (name) => tiers.find((t) => t.name === name)!,
  );
  for (let i = 0; i + 1 < ordered.length; i += 1) {
    if (!(ordered[i].lower_bound < ordered[i + 1].lower_bound)) {
      return {
        ok: false,
        reason: `${ordered[i].name} bound (${ordered[i].lower_bound}) must stay strictly below ${ordered[i + 1].name} (${ordered[i + 1].lower_bound})`,
      };
    }
  }
  return { ok: true };
}

// Last-writer-wins conflict detection: if the server's tiers moved away
// from what this client last saw, the edit still applied, but the console
// shows a banner with the superseding values.
export function detectConflict(lastSeen: TierBound[], current: TierBound[]): boolean {
  if (lastSeen.length !== current.length) return true;
  return lastSeen.some(
    (tier, i) => tier.name !== current[i].name || tier.lower_bound !== current[i].lower_bound,
  );
}
