"""Human assessment service.

Serves ranked candidate pairs in score order, records duplicate verdicts
and scrolled-past (implicit negative) pairs into an append-only JSONL
log, and reports live progress plus the search-curve overlap estimate.
State is a pure function of the log: restarts replay it.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .curve import SearchCurve, estimate_total, inverse
from .errors import EstimateUndefinedError, InvariantError
from .scoring import CandidatePair, read_pairs_jsonl

PairKey = tuple[str, str]


def pairs_file_version(path) -> str:
    """Hash pinning the ranked candidate file; serving order never changes
    within one version."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


@dataclass
class Progress:
    seen: int
    found: int
    negatives: int
    fraction: float | None = None
    estimated_total: int | None = None
    status: str = "ok"

    def to_dict(self) -> dict:
        return {
            "seen": self.seen,
            "found": self.found,
            "negatives": self.negatives,
            "fraction": self.fraction,
            "estimated_total": self.estimated_total,
            "status": self.status,
        }


class AssessmentState:
    """Verdict/seen bookkeeping over one ranked candidate list.

    All mutations append to the log first (flush + fsync) and are applied
    through the same code path used for replay, so a rebuilt instance is
    always identical to the live one.
    """

    def __init__(self, pairs: list[CandidatePair], version: str, log_path):
        self.pairs = pairs
        self.version = version
        self.log_path = Path(log_path)
        self.by_key: dict[PairKey, CandidatePair] = {p.pair_key: p for p in pairs}
        self.effective: dict[PairKey, str] = {}  # sticky: duplicate wins
        self.verdict_entries: set[tuple[str, str, str, str]] = set()
        self.seen: set[PairKey] = set()
        self.next_seq = 1
        self._lock = threading.Lock()
        if self.log_path.exists():
            self._replay()

    @classmethod
    def from_files(cls, pairs_path, log_path) -> "AssessmentState":
        return cls(
            pairs=read_pairs_jsonl(pairs_path),
            version=pairs_file_version(pairs_path),
            log_path=log_path,
        )

    # -- log handling -----------------------------------------------------

    def _replay(self) -> None:
        with open(self.log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                if entry["seq"] != self.next_seq:
                    raise InvariantError(
                        f"log sequence gap: expected {self.next_seq}, got {entry['seq']}"
                    )
                self._apply(entry)
                self.next_seq += 1

    def _append(self, entry: dict) -> int:
        entry = {"seq": self.next_seq, **entry}
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, separators=(",", ":")) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._apply(entry)
        self.next_seq += 1
        return entry["seq"]

    def _apply(self, entry: dict) -> None:
        if entry["kind"] == "verdict":
            key = (entry["query_id"], entry["gallery_id"])
            self.verdict_entries.add(
                (entry["query_id"], entry["gallery_id"], entry["label"], entry["assessor"])
            )
            if entry["label"] == "duplicate":
                self.effective[key] = "duplicate"
                self.seen.add(key)
            else:
                self.effective.setdefault(key, "negative")
        elif entry["kind"] == "seen":
            for q, g in entry["pairs"]:
                self.seen.add((q, g))
        else:
            raise InvariantError(f"unknown log entry kind {entry['kind']!r}")

    # -- operations -------------------------------------------------------

    def serve_pairs(self, after: int, limit: int) -> list[tuple[int, CandidatePair]]:
        """Pairs with 1-based ranks in (after, after+limit]; empty past the end."""
        if after < 0 or limit < 0:
            raise InvariantError("after and limit must be non-negative")
        window = self.pairs[after : after + limit]
        return [(after + i + 1, p) for i, p in enumerate(window)]

    def record_verdict(
        self, query_id: str, gallery_id: str, label: str, assessor: str
    ) -> int:
        if label not in ("duplicate", "negative"):
            raise InvariantError(f"malformed label {label!r}")
        key = (query_id, gallery_id)
        if key not in self.by_key:
            raise KeyError(f"unknown pair {key}")
        with self._lock:
            if (query_id, gallery_id, label, assessor) in self.verdict_entries:
                return self.next_seq - 1  # idempotent re-submission
            return self._append(
                {
                    "kind": "verdict",
                    "query_id": query_id,
                    "gallery_id": gallery_id,
                    "label": label,
                    "assessor": assessor,
                    "timestamp": int(time.time()),
                }
            )

    def record_seen(self, pair_keys: list[PairKey]) -> None:
        for key in pair_keys:
            if tuple(key) not in self.by_key:
                raise KeyError(f"unknown pair {tuple(key)}")
        with self._lock:
            new = [tuple(k) for k in pair_keys if tuple(k) not in self.seen]
            if new:
                self._append({"kind": "seen", "pairs": [list(k) for k in new]})

    def progress(self, curve: SearchCurve | None = None) -> Progress:
        found = sum(1 for v in self.effective.values() if v == "duplicate")
        seen = len(self.seen)
        negatives = sum(
            1 for key in self.seen if self.effective.get(key) != "duplicate"
        )
        prog = Progress(seen=seen, found=found, negatives=negatives)
        if curve is not None:
            try:
                prog.fraction = inverse(curve, negatives)
                prog.estimated_total = estimate_total(found, prog.fraction)
            except EstimateUndefinedError:
                prog.status = "insufficient data"
        elif found == 0:
            prog.status = "insufficient data"
        return prog

    def effective_duplicates(self) -> list[PairKey]:
        return sorted(k for k, v in self.effective.items() if v == "duplicate")


def create_app(
    state: AssessmentState,
    curve: SearchCurve | None = None,
    query_dataset: str = "query",
    gallery_dataset: str = "gallery",
    media_base: str = "/media",
):
    """FastAPI wrapper around an AssessmentState."""
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import PlainTextResponse

    app = FastAPI(title="dupkit assessment service")

    def media_refs(video_id: str, segment: tuple[int, int]) -> list[str]:
        return [f"{media_base}/{video_id}/{s}.jpg" for s in range(*segment)]

    @app.get("/api/pairs")
    def get_pairs(after: int = 0, limit: int = 20, version: str | None = None):
        if version is not None and version != state.version:
            raise HTTPException(status_code=409, detail="version mismatch")
        page = state.serve_pairs(after, limit)
        return {
            "version": state.version,
            "total": len(state.pairs),
            "pairs": [
                {
                    "rank": rank,
                    "query_id": p.query_id,
                    "gallery_id": p.gallery_id,
                    "score": p.score,
                    "q_start": p.query_segment[0],
                    "q_end": p.query_segment[1],
                    "g_start": p.gallery_segment[0],
                    "g_end": p.gallery_segment[1],
                    "k": p.k,
                    "query_thumbs": media_refs(p.query_id, p.query_segment),
                    "gallery_thumbs": media_refs(p.gallery_id, p.gallery_segment),
                    "verdict": state.effective.get(p.pair_key),
                }
                for rank, p in page
            ],
        }

    @app.post("/api/verdicts")
    def post_verdict(body: dict):
        try:
            query = body["query"]
            gallery = body["gallery"]
            label = body["label"]
            assessor = body["assessor"]
        except KeyError as exc:
            raise HTTPException(status_code=400, detail=f"missing field {exc}")
        for loc, expected in ((query, query_dataset), (gallery, gallery_dataset)):
            if loc.get("dataset") != expected:
                raise HTTPException(
                    status_code=400, detail=f"expected dataset {expected!r}"
                )
        try:
            seq = state.record_verdict(
                query["video_id"], gallery["video_id"], label, assessor
            )
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except InvariantError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        key = (query["video_id"], gallery["video_id"])
        return {"seq": seq, "effective_label": state.effective[key]}

    @app.post("/api/seen")
    def post_seen(body: dict):
        pairs = body.get("pairs")
        if not isinstance(pairs, list):
            raise HTTPException(status_code=400, detail="pairs must be a list")
        try:
            state.record_seen(
                [(p["query_id"], p["gallery_id"]) for p in pairs]
            )
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return state.progress(curve).to_dict()

    @app.get("/api/progress")
    def get_progress():
        return state.progress(curve).to_dict()

    @app.get("/api/export", response_class=PlainTextResponse)
    def get_export():
        lines = [
            json.dumps(
                {
                    "query": {"dataset": query_dataset, "video_id": q},
                    "gallery": {"dataset": gallery_dataset, "video_id": g},
                    "label": "duplicate",
                },
                separators=(",", ":"),
            )
            for q, g in state.effective_duplicates()
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    return app
