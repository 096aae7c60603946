"""Overlap estimation via the positive/negative search curve.

Score a set of videos against augmented copies of themselves (positives)
and against the other dataset (negatives). Sorting both descending yields
a step curve: for the x-th best positive, y = how many negatives outrank
it. Inverting the curve at the number of negatives actually inspected
gives the fraction of duplicates found, and total = found / fraction.
"""

from __future__ import annotations

import csv
import json
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import EstimateUndefinedError, InvariantError
from .store import EmbeddingSequence


@dataclass(frozen=True)
class AugmentationSpec:
    """Random crop fractions and sub-second start shift for one video."""

    video_id: str
    width_fraction: float  # [0.7, 1.0]
    height_fraction: float  # [0.7, 1.0]
    start_shift_s: float  # [0, 1)

    def __post_init__(self):
        if not 0.7 <= self.width_fraction <= 1.0:
            raise InvariantError(f"width_fraction {self.width_fraction} outside [0.7, 1]")
        if not 0.7 <= self.height_fraction <= 1.0:
            raise InvariantError(f"height_fraction {self.height_fraction} outside [0.7, 1]")
        if not 0.0 <= self.start_shift_s < 1.0:
            raise InvariantError(f"start_shift_s {self.start_shift_s} outside [0, 1)")


@dataclass
class SearchCurve:
    """Monotone step function: points[x] = (x, negatives ranked above the
    x-th positive)."""

    points: list[tuple[int, int]]
    pos_count: int
    neg_count: int

    def __post_init__(self):
        if len(self.points) != self.pos_count:
            raise InvariantError("points must cover x = 0 .. pos_count-1")
        prev = -1
        for i, (x, y) in enumerate(self.points):
            if x != i:
                raise InvariantError(f"point {i} has x={x}")
            if not 0 <= y <= self.neg_count:
                raise InvariantError(f"y={y} outside [0, {self.neg_count}]")
            if y < prev:
                raise InvariantError("y must be non-decreasing in x")
            prev = y


def plan_augmentations(video_ids: list[str], seed: int) -> list[AugmentationSpec]:
    """Deterministic per-video crop/shift plan; fractions uniform on
    [0.7, 1.0], shift uniform on [0, 1)."""
    rng = np.random.default_rng(seed)
    specs = []
    for vid in video_ids:
        w, h = rng.uniform(0.7, 1.0, size=2)
        shift = rng.uniform(0.0, 1.0)
        specs.append(
            AugmentationSpec(
                video_id=vid,
                width_fraction=float(w),
                height_fraction=float(h),
                start_shift_s=float(shift),
            )
        )
    return specs


def apply_augmentation_surrogate(
    seq: EmbeddingSequence, spec: AugmentationSpec, noise_sigma: float = 0.05
) -> EmbeddingSequence:
    """Embedding-level stand-in for re-extracting features from cropped,
    shifted video: drop the first frame when the shift rounds to a full
    second, then add seeded Gaussian noise emulating the crop.

    A testing device only; real pipelines re-run the feature extractor on
    the augmented video.
    """
    frames = seq.frames.astype(np.float64)
    weights = seq.weights
    if spec.start_shift_s >= 0.5 and seq.num_frames > 1:
        frames = frames[1:]
        weights = weights[1:]
    # noise seeded from the crop fractions so the same spec reproduces
    # the same surrogate
    key = f"{spec.video_id}|{spec.width_fraction:.9f}|{spec.height_fraction:.9f}"
    seed = zlib.crc32(key.encode("utf-8"))
    rng = np.random.default_rng(seed)
    noisy = frames + rng.normal(0.0, noise_sigma, size=frames.shape)
    return EmbeddingSequence(
        video_id=seq.video_id + "#aug", frames=noisy, weights=weights.copy()
    )


def build_curve(pos: list[float], neg: list[float]) -> SearchCurve:
    """Sort both descending; y(x) = negatives strictly greater than the
    x-th positive score (ties count as not-above)."""
    if len(pos) == 0:
        raise InvariantError("positive score set must be non-empty")
    p = np.sort(np.asarray(pos, dtype=np.float64))[::-1]
    n = np.sort(np.asarray(neg, dtype=np.float64))[::-1]
    points = []
    for x, score in enumerate(p):
        # descending array: use ascending searchsorted on the reversed view
        y = int(np.searchsorted(-n, -score, side="left"))
        points.append((x, y))
    return SearchCurve(points=points, pos_count=len(p), neg_count=len(n))


def inverse(curve: SearchCurve, negatives_seen: int) -> float:
    """Fraction of positives reachable after inspecting the given number
    of negatives: (x* + 1) / pos_count for the largest x with y(x) <= N."""
    if negatives_seen < 0:
        raise InvariantError(f"negatives_seen must be >= 0, got {negatives_seen}")
    best = -1
    for x, y in curve.points:
        if y <= negatives_seen:
            best = x
        else:
            break
    if best < 0:
        raise EstimateUndefinedError(
            f"no positive is reachable after {negatives_seen} negatives "
            f"(first positive needs {curve.points[0][1]})"
        )
    return (best + 1) / curve.pos_count


def estimate_total(found: int, fraction: float) -> int:
    """Estimated total duplicates = round(found / fraction_found_so_far)."""
    if found < 0:
        raise InvariantError(f"found must be >= 0, got {found}")
    if not 0.0 < fraction <= 1.0:
        raise InvariantError(f"fraction {fraction} outside (0, 1]")
    return round(found / fraction)


def write_curve_csv(curve: SearchCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        writer.writerows(curve.points)


def read_curve_csv(path) -> SearchCurve:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["x", "y"]:
            raise InvariantError(f"bad curve CSV header {header}")
        points = [(int(x), int(y)) for x, y in reader]
    if not points:
        raise InvariantError("curve CSV has no points")
    return SearchCurve(
        points=points, pos_count=len(points), neg_count=max(y for _, y in points)
    )


def estimate_report(negatives_seen: int, found: int, curve: SearchCurve) -> dict:
    """JSON-ready report {seen_negatives, found, fraction, estimated_total}."""
    frac = inverse(curve, negatives_seen)
    return {
        "seen_negatives": negatives_seen,
        "found": found,
        "fraction": frac,
        "estimated_total": estimate_total(found, frac),
    }


def write_estimate_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
