"""Weighted multi-dataset example sampling and epoch sizing.

A draw picks a dataset with probability weight/sum(weights), then a train
video uniformly, then one of its captions uniformly, with replacement.
Epoch length scales the base size by the probability mass of the included
datasets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantError
from .registry import Split, VideoRecord

DEFAULT_BASE_EPOCH = 150_000


@dataclass
class SamplerConfig:
    entries: list[tuple[str, float]]  # (dataset, weight > 0)
    base_epoch: int = DEFAULT_BASE_EPOCH
    seed: int = 0
    batch_size: int = 32

    def __post_init__(self):
        names = [d for d, _ in self.entries]
        if len(names) != len(set(names)):
            raise InvariantError("dataset names must be unique")
        if any(w <= 0 for _, w in self.entries):
            raise InvariantError("weights must be positive")
        if self.base_epoch < 1:
            raise InvariantError("base_epoch must be >= 1")
        if self.batch_size < 1:
            raise InvariantError("batch_size must be >= 1")

    @property
    def datasets(self) -> list[str]:
        return [d for d, _ in self.entries]

    @classmethod
    def from_json_file(cls, path) -> "SamplerConfig":
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
        return cls(
            entries=[(e["dataset"], float(e["weight"])) for e in d["entries"]],
            base_epoch=int(d.get("base_epoch", DEFAULT_BASE_EPOCH)),
            seed=int(d.get("seed", 0)),
            batch_size=int(d.get("batch_size", 32)),
        )


def dataset_probabilities(config: SamplerConfig) -> dict[str, float]:
    """p_d = w_d / sum(w); sums to 1 within 1e-12."""
    total = sum(w for _, w in config.entries)
    return {d: w / total for d, w in config.entries}


def epoch_length(config: SamplerConfig, included: set[str]) -> int:
    """round(base_epoch * sum of included dataset probabilities)."""
    if not included:
        raise InvariantError("included dataset set must be non-empty")
    probs = dataset_probabilities(config)
    unknown = included - set(probs)
    if unknown:
        raise InvariantError(f"unknown datasets {sorted(unknown)}")
    return round(config.base_epoch * sum(probs[d] for d in included))


@dataclass
class _DatasetPool:
    videos: list[VideoRecord] = field(default_factory=list)


class ExampleSampler:
    """Seeded hierarchical sampler over per-dataset train manifests."""

    def __init__(
        self,
        config: SamplerConfig,
        manifests: dict[str, list[VideoRecord]],
        epoch_index: int = 0,
        worker_index: int = 0,
    ):
        self.config = config
        self.probs = dataset_probabilities(config)
        self.pools: dict[str, _DatasetPool] = {}
        for dataset in config.datasets:
            videos = [
                r
                for r in manifests.get(dataset, [])
                if r.split is Split.TRAIN and r.captions
            ]
            if not videos:
                raise InvariantError(
                    f"dataset {dataset!r} has no train videos with captions"
                )
            self.pools[dataset] = _DatasetPool(videos=videos)
        # independent stream per (seed, epoch, worker)
        self.rng = np.random.default_rng(
            [config.seed, epoch_index, worker_index]
        )
        self._names = config.datasets
        self._p = np.array([self.probs[d] for d in self._names])

    def sample_indexed(self) -> tuple[str, str, int, str]:
        """One draw as (dataset, video_id, caption_index, caption)."""
        dataset = self._names[int(self.rng.choice(len(self._names), p=self._p))]
        pool = self.pools[dataset].videos
        video = pool[int(self.rng.integers(len(pool)))]
        ci = int(self.rng.integers(len(video.captions)))
        return dataset, video.video_id, ci, video.captions[ci]

    def sample(self) -> tuple[str, str, str]:
        """One (dataset, video_id, caption) draw."""
        dataset, video_id, _, caption = self.sample_indexed()
        return dataset, video_id, caption

    def sample_many(self, n: int) -> list[tuple[str, str, str]]:
        return [self.sample() for _ in range(n)]


def write_sample_dump(samples: list[tuple[str, str, int]], path) -> None:
    """Audit dump: JSONL of (dataset, video_id, caption_index)."""
    with open(path, "w", encoding="utf-8") as fh:
        for dataset, video_id, caption_index in samples:
            fh.write(
                json.dumps(
                    {
                        "dataset": dataset,
                        "video_id": video_id,
                        "caption_index": caption_index,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
