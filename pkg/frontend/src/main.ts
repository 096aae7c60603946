import { ApiClient } from './api.js';
import { FeedController } from './feed.js';
import { VerdictController } from './verdicts.js';
import { PairCard, Progress } from './types.js';

function cardElement(card: PairCard, verdicts: VerdictController): HTMLElement {
  const el = document.createElement('article');
  el.className = 'pair-card';
  el.dataset.rank = String(card.rank);

  const strips = document.createElement('div');
  strips.className = 'strips';
  for (const [label, thumbs] of [
    [card.query_id, card.query_thumbs],
    [card.gallery_id, card.gallery_thumbs],
  ] as const) {
    const row = document.createElement('div');
    row.className = 'strip';
    const caption = document.createElement('span');
    caption.textContent = label;
    row.appendChild(caption);
    for (const src of thumbs) {
      const img = document.createElement('img');
      img.src = src;
      img.loading = 'lazy';
      row.appendChild(img);
    }
    strips.appendChild(row);
  }
  el.appendChild(strips);

  const meta = document.createElement('p');
  meta.className = 'meta';
  meta.textContent =
    `#${card.rank}  score ${card.score.toFixed(4)}  ` +
    `q[${card.q_start}:${card.q_end}] g[${card.g_start}:${card.g_end}]`;
  el.appendChild(meta);

  const buttons = document.createElement('div');
  buttons.className = 'verdict-buttons';
  for (const label of ['duplicate', 'negative'] as const) {
    const btn = document.createElement('button');
    btn.textContent = label;
    btn.addEventListener('click', () => void verdicts.submit(card, label));
    buttons.appendChild(btn);
  }
  el.appendChild(buttons);

  renderVerdict(el, card);
  return el;
}

function renderVerdict(el: HTMLElement, card: PairCard): void {
  el.dataset.verdict = card.verdict ?? 'none';
  const buttons = el.querySelectorAll<HTMLButtonElement>('.verdict-buttons button');
  buttons.forEach((btn) => {
    btn.classList.toggle('active', btn.textContent === card.verdict);
  });
}

function renderProgress(el: HTMLElement, progress: Progress): void {
  const estimate =
    progress.estimated_total === null
      ? progress.status
      : `~${progress.estimated_total} duplicates total`;
  el.textContent =
    `seen ${progress.seen}  found ${progress.found}  ` +
    `negatives ${progress.negatives}  ${estimate}`;
}

export function start(root: HTMLElement, api = new ApiClient()): void {
  const feedEl = document.createElement('main');
  feedEl.id = 'feed';
  const progressEl = document.createElement('header');
  progressEl.id = 'progress';
  const banner = document.createElement('div');
  banner.id = 'conflict-banner';
  banner.hidden = true;
  banner.textContent =
    'The ranked list changed on the server. Reload to continue assessing.';
  root.append(banner, progressEl, feedEl);

  const cardEls = new Map<number, HTMLElement>();

  const verdicts = new VerdictController(api, 'ui', 'query', 'gallery', {
    onCardUpdate: (card) => {
      const el = cardEls.get(card.rank);
      if (el) renderVerdict(el, card);
    },
  });

  const feed = new FeedController(api, {
    onCards: (cards) => {
      for (const card of cards) {
        const el = cardElement(card, verdicts);
        cardEls.set(card.rank, el);
        feedEl.appendChild(el);
      }
    },
    onProgress: (progress) => renderProgress(progressEl, progress),
    onVersionConflict: () => {
      banner.hidden = false;
    },
  });

  // cards leaving through the top of the viewport count as assessed-seen
  const observer = new IntersectionObserver(
    (entries) => {
      let any = false;
      for (const entry of entries) {
        if (entry.isIntersecting || entry.boundingClientRect.top >= 0) continue;
        const rank = Number((entry.target as HTMLElement).dataset.rank);
        const card = feed.loadedCards.find((c) => c.rank === rank);
        if (card) {
          feed.markScrolledPast(card);
          any = true;
        }
      }
      if (any) void feed.flushSeen();
    },
    { threshold: 0 },
  );
  const cardObserver = new MutationObserver(() => {
    feedEl.querySelectorAll('.pair-card').forEach((el) => observer.observe(el));
  });
  cardObserver.observe(feedEl, { childList: true });

  window.addEventListener('scroll', () => {
    if (window.innerHeight + window.scrollY >= document.body.scrollHeight - 400) {
      void feed.loadMore();
    }
  });
  window.addEventListener('online', () => void verdicts.flush());

  void feed.loadMore();
  void feed.refreshProgress();
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  start(document.getElementById('app')!);
}
