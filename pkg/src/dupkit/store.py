"""Bit-exact binary storage of per-second frame-embedding sequences.

File layout (little-endian, no padding):
    magic "NDVS" | version u32=1 | dim u32 | record_count u64
    per record:
        id_len u16 | id bytes (UTF-8) | frame_count u32 | has_weights u8
        frame_count x dim f32 row-major | [frame_count f32 weights]

Embeddings are stored raw; normalization happens in the similarity
kernels. Weights default to 1.0 when absent.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InvariantError, StoreFormatError

MAGIC = b"NDVS"
VERSION = 1


@dataclass
class EmbeddingSequence:
    """One video's per-second frame embeddings plus per-frame weights."""

    video_id: str
    frames: np.ndarray  # (T, D) float32
    weights: np.ndarray | None = None  # (T,) float32 in [0, 1], default all 1

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1 or self.frames.shape[1] < 1:
            raise InvariantError(
                f"{self.video_id}: frames must be a non-empty TxD matrix, got shape {self.frames.shape}"
            )
        if not np.all(np.isfinite(self.frames)):
            raise InvariantError(f"{self.video_id}: frames contain NaN/Inf")
        if self.weights is None:
            self.weights = np.ones(self.frames.shape[0], dtype=np.float32)
        else:
            self.weights = np.asarray(self.weights, dtype=np.float32)
        if self.weights.shape != (self.frames.shape[0],):
            raise InvariantError(
                f"{self.video_id}: weights length {self.weights.shape} != frame count {self.frames.shape[0]}"
            )
        if not np.all(np.isfinite(self.weights)):
            raise InvariantError(f"{self.video_id}: weights contain NaN/Inf")
        if np.any(self.weights < 0) or np.any(self.weights > 1):
            raise InvariantError(f"{self.video_id}: weights outside [0, 1]")

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingSequence):
            return NotImplemented
        return (
            self.video_id == other.video_id
            and self.frames.shape == other.frames.shape
            and np.array_equal(
                self.frames.view(np.uint32), other.frames.view(np.uint32)
            )
            and np.array_equal(
                self.weights.view(np.uint32), other.weights.view(np.uint32)
            )
        )


@dataclass
class EmbeddingStore:
    """Immutable map of video_id -> EmbeddingSequence, all sharing one dim."""

    dim: int
    records: dict[str, EmbeddingSequence] = field(default_factory=dict)

    def __post_init__(self):
        for seq in self.records.values():
            if seq.dim != self.dim:
                raise DimensionMismatchError(
                    f"{seq.video_id}: dim {seq.dim} != store dim {self.dim}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, video_id: str) -> EmbeddingSequence:
        return self.records[video_id]

    def __contains__(self, video_id: str) -> bool:
        return video_id in self.records

    @classmethod
    def from_sequences(cls, sequences: list[EmbeddingSequence]) -> "EmbeddingStore":
        if not sequences:
            raise InvariantError("cannot build a store from zero sequences")
        dim = sequences[0].dim
        records: dict[str, EmbeddingSequence] = {}
        for seq in sequences:
            if seq.dim != dim:
                raise DimensionMismatchError(
                    f"{seq.video_id}: dim {seq.dim} != {dim}"
                )
            if seq.video_id in records:
                raise InvariantError(f"duplicate video_id {seq.video_id!r}")
            records[seq.video_id] = seq
        return cls(dim=dim, records=records)


def write_store(sequences: list[EmbeddingSequence], path) -> None:
    """Write sequences to a binary store file; round-trips bit-exactly."""
    store = EmbeddingStore.from_sequences(list(sequences))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIQ", VERSION, store.dim, len(store.records)))
        for seq in store.records.values():
            id_bytes = seq.video_id.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise InvariantError(f"video_id too long: {seq.video_id[:32]}...")
            has_weights = 0 if np.all(seq.weights == 1.0) else 1
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(struct.pack("<IB", seq.num_frames, has_weights))
            fh.write(np.ascontiguousarray(seq.frames, dtype="<f4").tobytes())
            if has_weights:
                fh.write(np.ascontiguousarray(seq.weights, dtype="<f4").tobytes())


def read_store(path) -> EmbeddingStore:
    """Read a store file, rejecting bad magic, truncation and NaN/Inf."""
    with open(path, "rb") as fh:
        data = fh.read()

    if data[:4] != MAGIC:
        raise StoreFormatError(f"bad magic bytes {data[:4]!r}")
    if len(data) < 4 + 16:
        raise StoreFormatError("truncated header")
    version, dim, count = struct.unpack_from("<IIQ", data, 4)
    if version != VERSION:
        raise StoreFormatError(f"unsupported format version {version}")
    if dim < 1:
        raise StoreFormatError(f"invalid dim {dim}")

    offset = 20
    records: dict[str, EmbeddingSequence] = {}
    for idx in range(count):
        try:
            (id_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            if len(data) < offset + id_len:
                raise struct.error("id truncated")
            video_id = data[offset : offset + id_len].decode("utf-8")
            offset += id_len
            frame_count, has_weights = struct.unpack_from("<IB", data, offset)
            offset += 5
            n_vals = frame_count * dim
            frames_end = offset + 4 * n_vals
            if frames_end > len(data):
                raise struct.error("frames truncated")
            frames = np.frombuffer(data, dtype="<f4", count=n_vals, offset=offset)
            frames = frames.reshape(frame_count, dim).copy()
            offset = frames_end
            weights = None
            if has_weights:
                if offset + 4 * frame_count > len(data):
                    raise struct.error("weights truncated")
                weights = np.frombuffer(
                    data, dtype="<f4", count=frame_count, offset=offset
                ).copy()
                offset += 4 * frame_count
        except struct.error as exc:
            raise StoreFormatError(f"truncated record {idx}: {exc}") from exc

        if frame_count < 1:
            raise StoreFormatError(f"record {idx} ({video_id!r}): zero frames")
        try:
            seq = EmbeddingSequence(video_id=video_id, frames=frames, weights=weights)
        except InvariantError as exc:
            raise StoreFormatError(f"record {idx}: {exc}") from exc
        if video_id in records:
            raise StoreFormatError(f"record {idx}: duplicate video_id {video_id!r}")
        records[video_id] = seq

    if offset != len(data):
        raise StoreFormatError(f"{len(data) - offset} trailing bytes after last record")
    return EmbeddingStore(dim=dim, records=records)
