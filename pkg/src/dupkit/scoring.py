"""Near-duplicate pair scoring.

For a pair of videos the weighted-cosine matrix over all frame pairs is
scanned with aligned K-second diagonal windows; the pair's score is the
best window-mean and the matched segments are the window positions. An
all-pairs ranker applies screensaver suppression first and emits a
deterministic descending ordering regardless of worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvariantError
from .similarity import ZERO_NORM_EPS, ScreensaverBlacklist, suppress_screensavers
from .store import EmbeddingSequence, EmbeddingStore

DEFAULT_WINDOW_S = 4


@dataclass(frozen=True)
class CandidatePair:
    """A scored (query, gallery) pair with its best-matching segments."""

    query_id: str
    gallery_id: str
    score: float
    query_segment: tuple[int, int]  # (start_s, end_s), end - start == k
    gallery_segment: tuple[int, int]
    k: int

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "query_id": self.query_id,
                "gallery_id": self.gallery_id,
                "score": round(self.score, 6),
                "q_start": self.query_segment[0],
                "q_end": self.query_segment[1],
                "g_start": self.gallery_segment[0],
                "g_end": self.gallery_segment[1],
                "k": self.k,
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json_line(cls, line: str) -> "CandidatePair":
        d = json.loads(line)
        return cls(
            query_id=d["query_id"],
            gallery_id=d["gallery_id"],
            score=float(d["score"]),
            query_segment=(int(d["q_start"]), int(d["q_end"])),
            gallery_segment=(int(d["g_start"]), int(d["g_end"])),
            k=int(d["k"]),
        )

    @property
    def pair_key(self) -> tuple[str, str]:
        return (self.query_id, self.gallery_id)


def _weighted_cosine_matrix(q: EmbeddingSequence, g: EmbeddingSequence) -> np.ndarray:
    """(T_q, T_g) matrix of mu_q * mu_g * cosine(q_a, g_b), float64."""

    def unit_rows(frames: np.ndarray) -> np.ndarray:
        f = frames.astype(np.float64)
        u = np.zeros_like(f)
        # per-row scalar norm: same primitive as the scalar cosine kernel,
        # so scores agree bit-for-bit with a per-pair reference
        for i in range(f.shape[0]):
            n = float(np.linalg.norm(f[i]))
            if n >= ZERO_NORM_EPS:
                u[i] = f[i] / n
        return u

    uq = unit_rows(q.frames)
    ug = unit_rows(g.frames)
    # per-pair np.dot, not a matmul: keeps results bit-identical to the
    # scalar cosine kernel (BLAS gemm sums in a different order)
    c = np.empty((q.num_frames, g.num_frames))
    for a in range(q.num_frames):
        for b in range(g.num_frames):
            c[a, b] = np.dot(uq[a], ug[b])
    w = np.outer(q.weights.astype(np.float64), g.weights.astype(np.float64))
    return w * c


def pair_score(
    q: EmbeddingSequence, g: EmbeddingSequence, k: int = DEFAULT_WINDOW_S
) -> CandidatePair:
    """Best aligned-window mean weighted-cosine between two videos.

    Scans all full windows; when a video is shorter than k the window
    shrinks to min(T_q, T_g). Argmax ties break to the lexicographically
    smallest (query_start, gallery_start).
    """
    if q.dim != g.dim:
        raise DimensionMismatchError(f"dims {q.dim} vs {g.dim}")
    if k < 1:
        raise InvariantError(f"window k must be >= 1, got {k}")
    keff = min(k, q.num_frames, g.num_frames)
    c = _weighted_cosine_matrix(q, g)
    n_a = q.num_frames - keff + 1
    n_b = g.num_frames - keff + 1
    acc = np.zeros((n_a, n_b))
    for t in range(keff):
        acc = acc + c[t : t + n_a, t : t + n_b]
    means = acc / keff
    flat = int(np.argmax(means))  # row-major, first occurrence: lexicographic (a, b)
    a, b = divmod(flat, n_b)
    return CandidatePair(
        query_id=q.video_id,
        gallery_id=g.video_id,
        score=float(means[a, b]),
        query_segment=(a, a + keff),
        gallery_segment=(b, b + keff),
        k=keff,
    )


def rank_all_pairs(
    queries: EmbeddingStore,
    gallery: EmbeddingStore,
    k: int = DEFAULT_WINDOW_S,
    blacklist: ScreensaverBlacklist | None = None,
    workers: int = 1,
) -> list[CandidatePair]:
    """Score every (query, gallery) pair, sorted by score descending.

    Ties break on (query_id, gallery_id). Output is identical for any
    worker count and any store iteration order.
    """
    if queries.dim != gallery.dim:
        raise DimensionMismatchError(f"store dims {queries.dim} vs {gallery.dim}")
    if len(queries) == 0 or len(gallery) == 0:
        raise InvariantError("both stores must be non-empty")

    def prep(store: EmbeddingStore) -> list[EmbeddingSequence]:
        seqs = [store.records[vid] for vid in sorted(store.records)]
        if blacklist is not None:
            seqs = [suppress_screensavers(s, blacklist) for s in seqs]
        return seqs

    q_seqs = prep(queries)
    g_seqs = prep(gallery)
    tasks = [(qs, gs) for qs in q_seqs for gs in g_seqs]

    if workers <= 1:
        results = [pair_score(qs, gs, k) for qs, gs in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: pair_score(t[0], t[1], k), tasks))

    results.sort(key=lambda p: (-p.score, p.query_id, p.gallery_id))
    return results


def write_pairs_jsonl(pairs: list[CandidatePair], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(p.to_json_line() + "\n")


def read_pairs_jsonl(path) -> list[CandidatePair]:
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                pairs.append(CandidatePair.from_json_line(line))
    return pairs
