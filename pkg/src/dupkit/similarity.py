"""Similarity kernels: cosine, weighted cosine, black-frame weighting and
screensaver suppression.

A frame dominated (>70% of pixels) by a single color gets weight
1 - dominant_fraction, otherwise weight 1. Frames too similar to a known
screensaver embedding are zeroed so intros/outros cannot top the ranking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvariantError
from .store import EmbeddingSequence

ZERO_NORM_EPS = 1e-12
DOMINANT_FRACTION_CUTOFF = 0.7
QUANT_LEVELS = 16  # per channel -> 16^3 = 4096 color bins


def cosine(u, v) -> float:
    """Cosine similarity; 0 when either vector has (near-)zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatchError(f"shapes {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu < ZERO_NORM_EPS or nv < ZERO_NORM_EPS:
        return 0.0
    return float(np.dot(u / nu, v / nv))


def weighted_cosine(u, mu_u: float, v, mu_v: float) -> float:
    """mu_u * mu_v * cosine(u, v); weights must lie in [0, 1]."""
    for mu in (mu_u, mu_v):
        if not 0.0 <= mu <= 1.0:
            raise InvariantError(f"frame weight {mu} outside [0, 1]")
    return mu_u * mu_v * cosine(u, v)


@dataclass(frozen=True)
class FrameRaster:
    """An h x w RGB frame as a uint8 array of shape (h, w, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise InvariantError(f"expected (h, w, 3) pixel grid, got {px.shape}")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def prevalent_color_fraction(frame: FrameRaster) -> float:
    """Fraction of pixels in the most populated quantized color bin.

    Channels are quantized to 16 levels each (4096 bins); ties go to the
    lowest bin index.
    """
    q = frame.pixels.astype(np.int64) // (256 // QUANT_LEVELS)
    bins = (q[..., 0] * QUANT_LEVELS + q[..., 1]) * QUANT_LEVELS + q[..., 2]
    counts = np.bincount(bins.ravel(), minlength=QUANT_LEVELS**3)
    # argmax returns the lowest index on ties
    return float(counts[int(np.argmax(counts))]) / (frame.height * frame.width)


def frame_weight(fraction: float) -> float:
    """Down-weight frames where one color covers more than 70% of the area."""
    if not 0.0 <= fraction <= 1.0:
        raise InvariantError(f"fraction {fraction} outside [0, 1]")
    if fraction > DOMINANT_FRACTION_CUTOFF:
        return 1.0 - fraction
    return 1.0


def raster_frame_weight(frame: FrameRaster) -> float:
    return frame_weight(prevalent_color_fraction(frame))


@dataclass
class ScreensaverBlacklist:
    """Unit-norm embeddings of known screensavers plus a similarity threshold."""

    entries: np.ndarray  # (n, D), each row unit norm
    threshold: float = 0.9

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.float32)
        if self.entries.ndim != 2:
            raise InvariantError(f"entries must be 2-D, got shape {self.entries.shape}")
        if len(self.entries):
            norms = np.linalg.norm(self.entries.astype(np.float64), axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-6):
                raise InvariantError("blacklist entries must be unit norm (1e-6)")
        if not 0.0 < self.threshold <= 1.0:
            raise InvariantError(f"threshold {self.threshold} outside (0, 1]")

    @property
    def dim(self) -> int:
        return self.entries.shape[1]

    def __len__(self) -> int:
        return len(self.entries)


def suppress_screensavers(
    seq: EmbeddingSequence, blacklist: ScreensaverBlacklist
) -> EmbeddingSequence:
    """Zero every frame whose cosine to any blacklist entry exceeds the threshold.

    Non-matching frames are returned bit-unchanged; idempotent because zero
    vectors have cosine 0 to everything.
    """
    if len(blacklist) == 0:
        return seq
    if blacklist.dim != seq.dim:
        raise DimensionMismatchError(
            f"blacklist dim {blacklist.dim} != sequence dim {seq.dim}"
        )
    frames = seq.frames.astype(np.float64)
    norms = np.linalg.norm(frames, axis=1)
    safe = np.where(norms < ZERO_NORM_EPS, 1.0, norms)
    unit = frames / safe[:, None]
    unit[norms < ZERO_NORM_EPS] = 0.0
    sims = unit @ blacklist.entries.astype(np.float64).T  # (T, n)
    hit = np.any(sims > blacklist.threshold, axis=1)
    if not np.any(hit):
        return seq
    out = seq.frames.copy()
    out[hit] = 0.0
    return EmbeddingSequence(
        video_id=seq.video_id, frames=out, weights=seq.weights.copy()
    )
