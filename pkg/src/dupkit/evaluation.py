"""Retrieval metrics, the bi-directional hinge ranking loss and
multi-modality similarity fusion."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InvariantError


@dataclass
class SimilarityMatrix:
    """Query x gallery similarities with one ground-truth column per query."""

    values: np.ndarray  # (n_queries, n_gallery)
    ground_truth: dict[int, int] | None = None  # default: diagonal

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise InvariantError(f"values must be 2-D, got shape {self.values.shape}")
        nq, ng = self.values.shape
        if self.ground_truth is None:
            if nq > ng:
                raise InvariantError("diagonal ground truth needs n_queries <= n_gallery")
            self.ground_truth = {i: i for i in range(nq)}
        if set(self.ground_truth) != set(range(nq)):
            raise InvariantError("every query needs exactly one ground-truth entry")
        for q, g in self.ground_truth.items():
            if not 0 <= g < ng:
                raise InvariantError(f"ground truth {g} for query {q} out of range")


@dataclass
class ModalityBundle:
    """Per-modality text/video embedding pairs plus non-negative weights."""

    text: dict[str, np.ndarray]
    video: dict[str, np.ndarray]
    weights: dict[str, float]

    def __post_init__(self):
        if not (set(self.text) == set(self.video) == set(self.weights)):
            raise InvariantError("modality names must match across text/video/weights")
        for name in self.text:
            t = np.asarray(self.text[name], dtype=np.float64)
            v = np.asarray(self.video[name], dtype=np.float64)
            if t.shape != v.shape:
                raise DimensionMismatchError(
                    f"modality {name!r}: text {t.shape} vs video {v.shape}"
                )
            if self.weights[name] < 0:
                raise InvariantError(f"modality {name!r}: negative weight")
            self.text[name] = t
            self.video[name] = v


def fuse_similarity(bundle: ModalityBundle) -> float:
    """Sum over modalities of weight * <text_embedding, video_embedding>."""
    return float(
        sum(
            bundle.weights[m] * np.dot(bundle.text[m], bundle.video[m])
            for m in sorted(bundle.text)
        )
    )


def ranking_loss(similarities: np.ndarray, margin: float) -> float:
    """Bi-directional max-margin ranking loss over an in-batch similarity
    matrix whose diagonal holds the matched pairs:

        (1/B) sum_i sum_{j != i} [ max(0, s_ij - s_ii + m)
                                 + max(0, s_ji - s_ii + m) ]
    """
    s = np.asarray(similarities, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InvariantError(f"batch similarity matrix must be square, got {s.shape}")
    b = s.shape[0]
    if b < 2:
        raise InvariantError("batch size must be >= 2")
    diag = np.diag(s)
    row_terms = np.maximum(0.0, s - diag[:, None] + margin)  # s_ij - s_ii + m
    col_terms = np.maximum(0.0, s.T - diag[:, None] + margin)  # s_ji - s_ii + m
    off = ~np.eye(b, dtype=bool)
    return float((row_terms[off].sum() + col_terms[off].sum()) / b)


def query_ranks(matrix: SimilarityMatrix) -> np.ndarray:
    """Rank of each query's ground-truth item: 1 + strictly-greater count
    + ties at smaller gallery index (deterministic tie-break)."""
    ranks = np.empty(matrix.values.shape[0], dtype=np.int64)
    for q in range(matrix.values.shape[0]):
        row = matrix.values[q]
        g = matrix.ground_truth[q]
        gt = row[g]
        greater = int(np.sum(row > gt))
        tied_before = int(np.sum(row[:g] == gt))
        ranks[q] = 1 + greater + tied_before
    return ranks


def retrieval_metrics(matrix: SimilarityMatrix, ks: list[int]) -> dict:
    """R@k percentages, mean rank and lower-median rank."""
    ng = matrix.values.shape[1]
    for k in ks:
        if k > ng:
            raise InvariantError(f"k={k} exceeds gallery size {ng}")
    ranks = query_ranks(matrix)
    n = len(ranks)
    sorted_ranks = np.sort(ranks)
    return {
        "r_at": {k: 100.0 * float(np.sum(ranks <= k)) / n for k in ks},
        "mnr": float(np.mean(ranks)),
        "mdr": float(sorted_ranks[(n + 1) // 2 - 1]),  # lower median
        "n_queries": n,
        "n_gallery": ng,
    }


def metrics_report_json(metrics: dict) -> str:
    """Table-style report: R@k to one decimal place."""
    return json.dumps(
        {
            "r_at": {str(k): round(v, 1) for k, v in metrics["r_at"].items()},
            "mnr": round(metrics["mnr"], 1),
            "mdr": round(metrics["mdr"], 1),
            "n_queries": metrics["n_queries"],
            "n_gallery": metrics["n_gallery"],
        },
        indent=2,
    )
