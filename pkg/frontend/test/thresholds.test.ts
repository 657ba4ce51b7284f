import { describe, expect, it } from 'vitest';

import { detectConflict, validateTierEdit } from '../src/thresholds.js';
import type { TierBound } from '../src/types.js';

const tiers = (flag: number, restrict: number, escalate: number): TierBound[] => [
  { name: 'flag_review', lower_bound: flag },
  { name: 'restrict', lower_bound: restrict },
  { name: 'escalate', lower_bound: escalate },
];

describe('validateTierEdit', () => {
  it('accepts strictly increasing bounds', () => {
    expect(validateTierEdit(tiers(0.7, 0.8, 0.9)).ok).toBe(true);
  });

  it('blocks restrict dragged below flag', () => {
    const result = validateTierEdit(tiers(0.8, 0.7, 0.9));
    expect(result.ok).toBe(false);
    expect(result.reason).toContain('flag_review');
  });

  it('blocks equal bounds (must be strict)', () => {
    expect(validateTierEdit(tiers(0.7, 0.7, 0.9)).ok).toBe(false);
  });

  it('blocks out-of-range bounds', () => {
    expect(validateTierEdit(tiers(0.7, 0.8, 1.3)).ok).toBe(false);
  });

  it('blocks duplicates and unknown names', () => {
    expect(
      validateTierEdit([
        { name: 'flag_review', lower_bound: 0.5 },
        { name: 'flag_review', lower_bound: 0.6 },
      ]),
    ).toMatchObject({ ok: false });
    expect(validateTierEdit([{ name: 'nope' as never, lower_bound: 0.5 }]).ok).toBe(false);
  });

  it('accepts a partial tier set in order', () => {
    expect(
      validateTierEdit([
        { name: 'flag_review', lower_bound: 0.6 },
        { name: 'escalate', lower_bound: 0.9 },
      ]).ok,
    ).toBe(true);
  });

  it('rejects an empty edit', () => {
    expect(validateTierEdit([]).ok).toBe(false);
  });
});

describe('detectConflict', () => {
  it('sees no conflict when the server matches the last view', () => {
    expect(detectConflict(tiers(0.7, 0.8, 0.9), tiers(0.7, 0.8, 0.9))).toBe(false);
  });

  it('flags a superseding edit', () => {
    expect(detectConflict(tiers(0.7, 0.8, 0.9), tiers(0.71, 0.8, 0.9))).toBe(true);
  });
});
