import hashlib
import json

import numpy as np
import pytest

from conftest import random_sequence
from dupkit.cli import main
from dupkit.curve import build_curve, write_curve_csv
from dupkit.registry import Split, VideoRecord, write_manifest_jsonl
from dupkit.scoring import rank_all_pairs, read_pairs_jsonl
from dupkit.store import EmbeddingStore, write_store


@pytest.fixture
def stores(tmp_path, rng):
    q_seqs = [random_sequence(rng, f"q{i}", 6, 8) for i in range(3)]
    g_seqs = [random_sequence(rng, f"g{i}", 6, 8) for i in range(3)]
    qp, gp = tmp_path / "q.ndvs", tmp_path / "g.ndvs"
    write_store(q_seqs, qp)
    write_store(g_seqs, gp)
    return qp, gp, q_seqs, g_seqs


def test_score_delegates_to_ranker(tmp_path, stores):
    qp, gp, q_seqs, g_seqs = stores
    out = tmp_path / "pairs.jsonl"
    assert main(["score", "--query", str(qp), "--gallery", str(gp),
                 "--k", "4", "--out", str(out)]) == 0
    got = read_pairs_jsonl(out)
    expected = rank_all_pairs(
        EmbeddingStore.from_sequences(q_seqs),
        EmbeddingStore.from_sequences(g_seqs),
        k=4,
    )
    assert [p.pair_key for p in got] == [p.pair_key for p in expected]


def test_score_worker_invariance(tmp_path, stores):
    qp, gp, _, _ = stores
    outs = []
    for w in (1, 4):
        out = tmp_path / f"pairs{w}.jsonl"
        assert main(["score", "--query", str(qp), "--gallery", str(gp),
                     "--workers", str(w), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_estimate_prints_paper_number(tmp_path, capsys):
    pos = [1.0] * 15 + [-1.0] * 305
    neg = [0.0] * 5500  # the 16th positive needs more negatives than seen
    curve_path = tmp_path / "c.csv"
    write_curve_csv(build_curve(pos, neg), curve_path)
    assert main(["estimate", "--curve", str(curve_path),
                 "--seen", "5000", "--found", "15"]) == 0
    assert capsys.readouterr().out.strip() == "320"


def test_curve_command(tmp_path):
    (tmp_path / "pos.txt").write_text("0.9\n0.5\n")
    (tmp_path / "neg.txt").write_text("0.7\n0.3\n")
    out = tmp_path / "c.csv"
    assert main(["curve", "--pos", str(tmp_path / "pos.txt"),
                 "--neg", str(tmp_path / "neg.txt"), "--out", str(out)]) == 0
    assert out.read_text().splitlines() == ["x,y", "0,0", "1,1"]


def test_clean_keeps_test_hash(tmp_path):
    records = [
        VideoRecord(dataset="d", video_id="T", split=Split.TEST, youtube_id="X",
                    captions=("c",)),
        VideoRecord(dataset="d", video_id="A", split=Split.TRAIN, youtube_id="X",
                    captions=("c",)),
        VideoRecord(dataset="d", video_id="B", split=Split.TRAIN, captions=("c",)),
    ]
    manifest = tmp_path / "m.jsonl"
    write_manifest_jsonl(records, manifest)
    test_only = tmp_path / "test_only.jsonl"
    write_manifest_jsonl([records[0]], test_only)
    out = tmp_path / "clean"
    assert main(["clean", "--manifests", str(manifest), "--out", str(out)]) == 0
    assert hashlib.sha256((out / "test.jsonl").read_bytes()).hexdigest() == \
        hashlib.sha256(test_only.read_bytes()).hexdigest()
    kept = (out / "train.jsonl").read_text()
    assert '"B"' in kept and '"A"' not in kept
    removals = [json.loads(l) for l in (out / "removals.jsonl").read_text().splitlines()]
    assert removals[0]["video_id"] == "A"
    assert removals[0]["stage"] == "youtube_id"


def test_clean_with_verdicts(tmp_path):
    records = [
        VideoRecord(dataset="d", video_id="T", split=Split.TEST, captions=("c",)),
        VideoRecord(dataset="d", video_id="A", split=Split.TRAIN, captions=("c",)),
    ]
    manifest = tmp_path / "m.jsonl"
    write_manifest_jsonl(records, manifest)
    verdicts = tmp_path / "v.jsonl"
    verdicts.write_text(json.dumps({
        "query": {"dataset": "d", "video_id": "T"},
        "gallery": {"dataset": "d", "video_id": "A"},
        "label": "duplicate", "assessor": "ann",
    }) + "\n")
    out = tmp_path / "clean"
    assert main(["clean", "--manifests", str(manifest),
                 "--verdicts", str(verdicts), "--out", str(out)]) == 0
    assert (out / "train.jsonl").read_text() == ""


def test_ingest_roundtrip(tmp_path, rng):
    npz = tmp_path / "emb.npz"
    frames = rng.normal(size=(5, 8)).astype(np.float32)
    weights = rng.uniform(0, 1, size=5).astype(np.float32)
    np.savez(npz, vid1=frames, **{"vid1.weights": weights})
    out = tmp_path / "s.ndvs"
    assert main(["ingest", "--embeddings", str(npz), "--out", str(out)]) == 0
    from dupkit.store import read_store

    store = read_store(out)
    assert np.array_equal(store["vid1"].frames, frames)
    assert np.array_equal(store["vid1"].weights, weights)


def test_sample_command(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({
        "entries": [{"dataset": "a", "weight": 3}, {"dataset": "b", "weight": 1}],
        "seed": 1,
    }))
    manifest = tmp_path / "m.jsonl"
    write_manifest_jsonl([
        VideoRecord(dataset="a", video_id="av", split=Split.TRAIN, captions=("c1", "c2")),
        VideoRecord(dataset="b", video_id="bv", split=Split.TRAIN, captions=("c",)),
    ], manifest)
    out = tmp_path / "dump.jsonl"
    assert main(["sample", "--config", str(config), "--manifests", str(manifest),
                 "--n", "100", "--out", str(out)]) == 0
    lines = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(lines) == 100
    assert {l["dataset"] for l in lines} == {"a", "b"}
    assert all(set(l) == {"dataset", "video_id", "caption_index"} for l in lines)


def test_eval_command(tmp_path, capsys):
    sims = tmp_path / "s.npy"
    np.save(sims, np.eye(10))
    assert main(["eval", "--similarities", str(sims)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["r_at"]["1"] == 100.0
    assert report["mdr"] == 1.0


def test_usage_error_exit_1(capsys):
    assert main(["score"]) == 1  # missing required flags


def test_data_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.ndvs"
    bad.write_bytes(b"XXXXgarbage")
    assert main(["score", "--query", str(bad), "--gallery", str(bad),
                 "--out", str(tmp_path / "o")]) == 2


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    assert "dupkit" in capsys.readouterr().out
