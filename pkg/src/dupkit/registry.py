"""Dataset manifests, the video identity graph and two-stage cleaning.

Stage 1 drops every train video sharing a YouTube ID with any test video.
Stage 2 takes human duplicate verdicts, links videos that share a YouTube
ID, a source movie or an internal source video, and removes every train
video whose connected component touches the test set. Test parts are
never modified.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from enum import Enum

from .errors import InvariantError

VideoKey = tuple[str, str]  # (dataset, video_id)


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


class VerdictLabel(str, Enum):
    DUPLICATE = "duplicate"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class VideoRecord:
    dataset: str
    video_id: str
    split: Split
    youtube_id: str | None = None
    movie: str | None = None  # source film for movie-derived datasets
    source_video_id: str | None = None  # internal parent video
    captions: tuple[str, ...] = ()
    duration_s: float = 0.0

    @property
    def key(self) -> VideoKey:
        return (self.dataset, self.video_id)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["split"] = self.split.value
        d["captions"] = list(self.captions)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VideoRecord":
        return cls(
            dataset=d["dataset"],
            video_id=d["video_id"],
            split=Split(d["split"]),
            youtube_id=d.get("youtube_id"),
            movie=d.get("movie"),
            source_video_id=d.get("source_video_id"),
            captions=tuple(d.get("captions") or ()),
            duration_s=float(d.get("duration_s") or 0.0),
        )


@dataclass(frozen=True)
class Verdict:
    query: VideoKey
    gallery: VideoKey
    label: VerdictLabel
    assessor: str
    timestamp: int = 0

    def __post_init__(self):
        if self.query == self.gallery:
            raise InvariantError(f"verdict pairs a video with itself: {self.query}")


@dataclass
class Removal:
    video_id: str
    dataset: str
    stage: str  # youtube_id | assessed | propagated
    component_id: int | None = None


class IdentityGraph:
    """Videos linked by shared YouTube ID, source movie, internal source
    video, or an assessed duplicate verdict."""

    def __init__(self, records: list[VideoRecord]):
        self.records: dict[VideoKey, VideoRecord] = {}
        for rec in records:
            if rec.key in self.records:
                raise InvariantError(f"duplicate record key {rec.key}")
            self.records[rec.key] = rec
        self._extra_edges: list[tuple[VideoKey, VideoKey]] = []

    def add_duplicate_edge(self, a: VideoKey, b: VideoKey) -> None:
        for key in (a, b):
            if key not in self.records:
                raise InvariantError(f"verdict references unknown video {key}")
        self._extra_edges.append((a, b))

    def _union_find_components(self) -> dict[VideoKey, int]:
        keys = sorted(self.records)
        parent = {k: k for k in keys}

        def find(k):
            root = k
            while parent[root] != root:
                root = parent[root]
            while parent[k] != root:
                parent[k], k = root, parent[k]
            return root

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

        by_youtube: dict[str, VideoKey] = {}
        by_movie: dict[str, VideoKey] = {}
        by_source: dict[tuple[str, str], VideoKey] = {}
        for key in keys:
            rec = self.records[key]
            if rec.youtube_id:
                if rec.youtube_id in by_youtube:
                    union(by_youtube[rec.youtube_id], key)
                else:
                    by_youtube[rec.youtube_id] = key
            if rec.movie:
                movie_key = f"{rec.dataset}/{rec.movie}"
                if movie_key in by_movie:
                    union(by_movie[movie_key], key)
                else:
                    by_movie[movie_key] = key
            if rec.source_video_id:
                src = (rec.dataset, rec.source_video_id)
                if src in by_source:
                    union(by_source[src], key)
                else:
                    by_source[src] = key
        for a, b in self._extra_edges:
            union(a, b)

        roots = sorted({find(k) for k in keys})
        root_ids = {r: i for i, r in enumerate(roots)}
        return {k: root_ids[find(k)] for k in keys}


def stage1_clean(
    train: list[VideoRecord], test: list[VideoRecord]
) -> tuple[list[VideoRecord], list[VideoRecord]]:
    """Remove every train record sharing a YouTube ID with any test record."""
    test_ids = {r.youtube_id for r in test if r.youtube_id}
    kept, removed = [], []
    for rec in train:
        if rec.youtube_id and rec.youtube_id in test_ids:
            removed.append(rec)
        else:
            kept.append(rec)
    return kept, removed


def propagate_and_clean(
    graph: IdentityGraph, verdicts: list[Verdict]
) -> tuple[list[VideoRecord], list[Removal]]:
    """Stage 2: connected components over all identity edges plus duplicate
    verdicts; any train video in a component containing a test video is
    removed. A single duplicate label wins over any negatives for a pair."""
    for v in verdicts:
        if v.label is VerdictLabel.DUPLICATE:
            graph.add_duplicate_edge(v.query, v.gallery)

    components = graph._union_find_components()
    test_components = {
        components[key]
        for key, rec in graph.records.items()
        if rec.split is Split.TEST
    }
    dup_keys = {
        key
        for v in verdicts
        if v.label is VerdictLabel.DUPLICATE
        for key in (v.query, v.gallery)
    }
    yt_test = {
        rec.youtube_id
        for rec in graph.records.values()
        if rec.split is Split.TEST and rec.youtube_id
    }

    kept, removals = [], []
    for key in sorted(graph.records):
        rec = graph.records[key]
        if rec.split is not Split.TRAIN:
            continue
        comp = components[key]
        if comp in test_components:
            if rec.youtube_id and rec.youtube_id in yt_test:
                stage = "youtube_id"
            elif key in dup_keys:
                stage = "assessed"
            else:
                stage = "propagated"
            removals.append(
                Removal(
                    video_id=rec.video_id,
                    dataset=rec.dataset,
                    stage=stage,
                    component_id=comp,
                )
            )
        else:
            kept.append(rec)
    return kept, removals


@dataclass
class DatasetManifest:
    dataset: str
    train: list[VideoRecord] = field(default_factory=list)
    test: list[VideoRecord] = field(default_factory=list)
    removals: list[Removal] = field(default_factory=list)


def emit_clean_split(
    dataset: str,
    kept_train: list[VideoRecord],
    test: list[VideoRecord],
    removals: list[Removal] | None = None,
) -> DatasetManifest:
    """Cleaned split: test part untouched, train part reduced to kept_train."""
    return DatasetManifest(
        dataset=dataset,
        train=[r for r in kept_train if r.dataset == dataset],
        test=list(test),
        removals=[r for r in (removals or []) if r.dataset == dataset],
    )


def write_manifest_jsonl(records: list[VideoRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), separators=(",", ":")) + "\n")


def read_manifest_jsonl(path) -> list[VideoRecord]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(VideoRecord.from_dict(json.loads(line)))
    return out


def write_removals_jsonl(removals: list[Removal], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in removals:
            fh.write(
                json.dumps(
                    {
                        "video_id": r.video_id,
                        "dataset": r.dataset,
                        "stage": r.stage,
                        "component_id": r.component_id,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
