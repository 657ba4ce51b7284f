// Review queue state machine. Items come straight from the candidates
// endpoint; labeled items leave the pending queue. Submission is
// optimistic: the item is removed immediately and restored on failure,
// except for stale decisions (404), which are flagged and never retried.

import type { Candidate } from './types.js';

export interface QueueItem extends Candidate {
  stale: boolean;
}

export type LabelVerdict = 'true_positive' | 'false_positive';

export interface SubmitOutcome {
  videoId: string;
  status: 'submitted' | 'rolled_back' | 'stale';
  error?: string;
}

export class ReviewQueue {
  private items: QueueItem[] = [];

  // refresh replaces the queue with the service's candidate ordering
  // (score descending already); only undecided-label items are pending
  load(candidates: Candidate[]): void {
    this.items = candidates
      .filter((c) => c.has_decision && c.label === null)
      .map((c) => ({ ...c, stale: false }));
  }

  get pending(): QueueItem[] {
    return this.items.filter((item) => !item.stale);
  }

  get staleItems(): QueueItem[] {
    return this.items.filter((item) => item.stale);
  }

  peek(): QueueItem | undefined {
    return this.pending[0];
  }

  get length(): number {
    return this.pending.length;
  }

  async submit(
    videoId: string,
    verdict: LabelVerdict,
    send: (videoId: string, verdict: LabelVerdict) => Promise<unknown>,
  ): Promise<SubmitOutcome> {
    const index = this.items.findIndex((item) => item.video_id === videoId && !item.stale);
    if (index < 0) {
      return { videoId, status: 'stale', error: 'not in queue' };
    }
    const [removed] = this.items.splice(index, 1); // optimistic removal
    try {
      await send(videoId, verdict);
      return { videoId, status: 'submitted' };
    } catch (err) {
      const status = (err as { status?: number }).status;
      if (status === 404) {
        // the decision disappeared server-side; mark stale, do not retry
        this.items.splice(index, 0, { ...removed, stale: true });
        return { videoId, status: 'stale', error: String(err) };
      }
      this.items.splice(index, 0, removed); // rollback
      return { videoId, status: 'rolled_back', error: String(err) };
    }
  }
}
