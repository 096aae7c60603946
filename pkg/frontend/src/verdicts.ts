import { ApiClient } from './api.js';
import { PairCard, VerdictRequest } from './types.js';

export interface VerdictEvents {
  onCardUpdate?: (card: PairCard) => void;
  onQueueChange?: (pending: number) => void;
}

interface QueuedVerdict {
  card: PairCard;
  request: VerdictRequest;
  previous: PairCard['verdict'];
}

/**
 * Optimistic verdict submission.
 *
 * The card flips immediately; the request is confirmed in the background.
 * A failed send parks the verdict in an offline queue (the optimistic
 * label stays visible) and flush() retries in order. Resubmitting the
 * same verdict is harmless because the server log is idempotent, and a
 * duplicate label is sticky server-side, so the effective label in the
 * ack is authoritative.
 */
export class VerdictController {
  private readonly queue: QueuedVerdict[] = [];
  private flushing = false;

  constructor(
    private readonly api: ApiClient,
    private readonly assessor: string,
    private readonly queryDataset = 'query',
    private readonly galleryDataset = 'gallery',
    private readonly events: VerdictEvents = {},
  ) {}

  get pendingCount(): number {
    return this.queue.length;
  }

  async submit(card: PairCard, label: 'duplicate' | 'negative'): Promise<void> {
    const previous = card.verdict;
    card.verdict = label;
    this.events.onCardUpdate?.(card);
    const request: VerdictRequest = {
      query: { dataset: this.queryDataset, video_id: card.query_id },
      gallery: { dataset: this.galleryDataset, video_id: card.gallery_id },
      label,
      assessor: this.assessor,
    };
    try {
      const ack = await this.api.postVerdict(request);
      card.verdict = ack.effective_label;
      this.events.onCardUpdate?.(card);
    } catch {
      this.queue.push({ card, request, previous });
      this.events.onQueueChange?.(this.queue.length);
    }
  }

  /** Retry queued verdicts in order; stops at the first failure. */
  async flush(): Promise<number> {
    if (this.flushing) return 0;
    this.flushing = true;
    let sent = 0;
    try {
      while (this.queue.length > 0) {
        const item = this.queue[0];
        try {
          const ack = await this.api.postVerdict(item.request);
          item.card.verdict = ack.effective_label;
          this.events.onCardUpdate?.(item.card);
        } catch {
          break;
        }
        this.queue.shift();
        sent += 1;
        this.events.onQueueChange?.(this.queue.length);
      }
    } finally {
      this.flushing = false;
    }
    return sent;
  }

  /** Drop queued verdicts and roll their cards back to the last confirmed label. */
  discardQueue(): void {
    while (this.queue.length > 0) {
      const item = this.queue.pop()!;
      item.card.verdict = item.previous;
      this.events.onCardUpdate?.(item.card);
    }
    this.events.onQueueChange?.(0);
  }
}
