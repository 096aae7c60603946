import { ApiClient } from './api.js';
import { PairCard, Progress, VersionConflictError } from './types.js';

export interface FeedEvents {
  onCards?: (cards: PairCard[]) => void;
  onProgress?: (progress: Progress) => void;
  onVersionConflict?: () => void;
}

/**
 * Infinite-scroll feed over the ranked pair list.
 *
 * Pages are fetched strictly in rank order and never re-requested, so no
 * rank is served twice. Cards that scroll past the top of the viewport
 * are batched into a single seen report each; retrying a batch is safe
 * because the server treats seen as a set.
 */
export class FeedController {
  private version: string | undefined;
  private nextAfter = 0;
  private total = Infinity;
  private loading = false;
  private conflict = false;
  private readonly cards: PairCard[] = [];
  private readonly seenReported = new Set<number>(); // ranks
  private readonly pendingSeen: PairCard[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly events: FeedEvents = {},
    private readonly pageSize = 10,
  ) {}

  get loadedCards(): readonly PairCard[] {
    return this.cards;
  }

  get hasConflict(): boolean {
    return this.conflict;
  }

  /** Fetch the next page; no-op while a request is in flight or done. */
  async loadMore(): Promise<PairCard[]> {
    if (this.loading || this.conflict || this.nextAfter >= this.total) return [];
    this.loading = true;
    try {
      const page = await this.api.getPairs(this.nextAfter, this.pageSize, this.version);
      if (this.version === undefined) this.version = page.version;
      this.total = page.total;
      this.nextAfter += page.pairs.length;
      this.cards.push(...page.pairs);
      if (page.pairs.length > 0) this.events.onCards?.(page.pairs);
      return page.pairs;
    } catch (err) {
      if (err instanceof VersionConflictError) {
        this.conflict = true;
        this.events.onVersionConflict?.();
        return [];
      }
      throw err;
    } finally {
      this.loading = false;
    }
  }

  /**
   * Report a card as scrolled past the viewport top. Each card joins
   * exactly one seen batch; flush() sends whatever has accumulated.
   */
  markScrolledPast(card: PairCard): void {
    if (this.seenReported.has(card.rank)) return;
    this.seenReported.add(card.rank);
    this.pendingSeen.push(card);
  }

  async flushSeen(): Promise<Progress | null> {
    if (this.pendingSeen.length === 0) return null;
    const batch = this.pendingSeen.splice(0, this.pendingSeen.length);
    try {
      const progress = await this.api.postSeen(
        batch.map((c) => ({ query_id: c.query_id, gallery_id: c.gallery_id })),
      );
      this.events.onProgress?.(progress);
      return progress;
    } catch (err) {
      // restore for the next flush; ranks stay marked so no double batch
      this.pendingSeen.unshift(...batch);
      throw err;
    }
  }

  async refreshProgress(): Promise<Progress> {
    const progress = await this.api.getProgress();
    this.events.onProgress?.(progress);
    return progress;
  }
}
