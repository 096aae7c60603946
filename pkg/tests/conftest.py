import numpy as np
import pytest

from dupkit.similarity import weighted_cosine
from dupkit.store import EmbeddingSequence


def random_sequence(rng, video_id, num_frames, dim, unit=False, weighted=False):
    frames = rng.normal(size=(num_frames, dim))
    if unit:
        frames = frames / np.linalg.norm(frames, axis=1, keepdims=True)
    weights = rng.uniform(0, 1, size=num_frames) if weighted else None
    return EmbeddingSequence(video_id=video_id, frames=frames, weights=weights)


def brute_force_pair_score(q, g, k):
    """Exhaustive enumeration of every full aligned window; independent of
    the production diagonal-scan implementation. Uses the scalar weighted
    cosine kernel per frame pair."""
    keff = min(k, q.num_frames, g.num_frames)
    c = [
        [
            weighted_cosine(
                q.frames[a], float(q.weights[a]), g.frames[b], float(g.weights[b])
            )
            for b in range(g.num_frames)
        ]
        for a in range(q.num_frames)
    ]
    best = None
    for a in range(q.num_frames - keff + 1):
        for b in range(g.num_frames - keff + 1):
            acc = 0.0
            for t in range(keff):
                acc += c[a + t][b + t]
            mean = acc / keff
            if best is None or mean > best[0]:
                best = (mean, a, b)
    score, a, b = best
    return score, (a, a + keff), (b, b + keff), keff


def brute_force_curve_points(pos, neg):
    """Quadratic pairwise counter: y(x) = negatives strictly above the x-th
    best positive."""
    p_sorted = sorted(pos, reverse=True)
    return [
        (x, sum(1 for n in neg if n > p)) for x, p in enumerate(p_sorted)
    ]


def brute_force_ranks(values, ground_truth):
    """Sort-based rank oracle with the smaller-gallery-index tie-break."""
    ranks = []
    for qi in range(values.shape[0]):
        row = values[qi]
        g = ground_truth[qi]
        order = sorted(range(len(row)), key=lambda j: (-row[j], j))
        ranks.append(order.index(g) + 1)
    return ranks


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
