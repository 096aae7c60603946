"""Command-line entry point orchestrating the pipeline.

Subcommands: ingest, score, curve, estimate, clean, sample, eval, serve.
Exit codes: 0 success, 1 usage error, 2 data error. Machine-readable
output goes to stdout or --out; logs go to stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .curve import (
    build_curve,
    estimate_report,
    read_curve_csv,
    write_curve_csv,
)
from .errors import DupkitError
from .evaluation import SimilarityMatrix, metrics_report_json, retrieval_metrics
from .registry import (
    IdentityGraph,
    Split,
    Verdict,
    VerdictLabel,
    propagate_and_clean,
    read_manifest_jsonl,
    write_manifest_jsonl,
    write_removals_jsonl,
)
from .sampling import ExampleSampler, SamplerConfig, write_sample_dump
from .scoring import rank_all_pairs, write_pairs_jsonl
from .similarity import ScreensaverBlacklist
from .store import EmbeddingSequence, read_store, write_store

STORE_FORMAT_VERSION = 1


@click.group()
@click.version_option(__version__, message=f"dupkit {__version__} (store format v{STORE_FORMAT_VERSION})")
def cli():
    """Near-duplicate search, overlap estimation and dataset cleaning."""


@cli.command()
@click.option("--embeddings", "npz_path", required=True, type=click.Path(exists=True),
              help="NPZ file: one TxD float array per video id, optional '<id>.weights'.")
@click.option("--out", required=True, type=click.Path())
def ingest(npz_path, out):
    """Build a binary embedding store from an NPZ bundle."""
    data = np.load(npz_path)
    sequences = []
    for name in data.files:
        if name.endswith(".weights"):
            continue
        weights = data[f"{name}.weights"] if f"{name}.weights" in data.files else None
        sequences.append(EmbeddingSequence(video_id=name, frames=data[name], weights=weights))
    write_store(sequences, out)
    click.echo(f"wrote {len(sequences)} sequences to {out}", err=True)


def _load_blacklist(path, threshold) -> ScreensaverBlacklist | None:
    if path is None:
        return None
    store = read_store(path)
    entries = np.stack(
        [store.records[vid].frames[0] for vid in sorted(store.records)]
    )
    norms = np.linalg.norm(entries.astype(np.float64), axis=1, keepdims=True)
    return ScreensaverBlacklist(entries=entries / norms, threshold=threshold)


@cli.command()
@click.option("--query", "query_path", required=True, type=click.Path(exists=True))
@click.option("--gallery", "gallery_path", required=True, type=click.Path(exists=True))
@click.option("--k", default=4, show_default=True)
@click.option("--blacklist", type=click.Path(exists=True))
@click.option("--screensaver-threshold", default=0.9, show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--out", required=True, type=click.Path())
def score(query_path, gallery_path, k, blacklist, screensaver_threshold, workers, out):
    """Rank all query x gallery pairs by intersection score."""
    pairs = rank_all_pairs(
        read_store(query_path),
        read_store(gallery_path),
        k=k,
        blacklist=_load_blacklist(blacklist, screensaver_threshold),
        workers=workers,
    )
    write_pairs_jsonl(pairs, out)
    click.echo(f"wrote {len(pairs)} scored pairs to {out}", err=True)


@cli.command()
@click.option("--pos", "pos_path", required=True, type=click.Path(exists=True),
              help="Text file, one positive score per line.")
@click.option("--neg", "neg_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def curve(pos_path, neg_path, out):
    """Build the search curve from positive/negative score files."""
    def load(path):
        return [float(x) for x in Path(path).read_text().split()]

    c = build_curve(load(pos_path), load(neg_path))
    write_curve_csv(c, out)
    click.echo(f"wrote curve ({c.pos_count} pos, {c.neg_count} neg) to {out}", err=True)


@cli.command()
@click.option("--curve", "curve_path", required=True, type=click.Path(exists=True))
@click.option("--seen", required=True, type=int, help="Negative pairs inspected.")
@click.option("--found", required=True, type=int, help="Duplicates found.")
@click.option("--out", type=click.Path())
def estimate(curve_path, seen, found, out):
    """Estimate the total duplicate count from assessment progress."""
    report = estimate_report(seen, found, read_curve_csv(curve_path))
    if out:
        Path(out).write_text(json.dumps(report, indent=2) + "\n")
    click.echo(report["estimated_total"])


@cli.command()
@click.option("--manifests", required=True, type=click.Path(exists=True),
              help="JSONL manifest of train+test VideoRecords.")
@click.option("--verdicts", "verdicts_path", type=click.Path(exists=True),
              help="JSONL of assessed verdicts.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def clean(manifests, verdicts_path, out_dir):
    """Two-stage cleaning: emit kept train, untouched test and removals."""
    records = read_manifest_jsonl(manifests)
    verdicts = []
    if verdicts_path:
        with open(verdicts_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                d = json.loads(line)
                verdicts.append(
                    Verdict(
                        query=(d["query"]["dataset"], d["query"]["video_id"]),
                        gallery=(d["gallery"]["dataset"], d["gallery"]["video_id"]),
                        label=VerdictLabel(d["label"]),
                        assessor=d.get("assessor", ""),
                        timestamp=int(d.get("timestamp", 0)),
                    )
                )
    graph = IdentityGraph(records)
    kept, removals = propagate_and_clean(graph, verdicts)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    test = [r for r in records if r.split is Split.TEST]
    write_manifest_jsonl(kept, out / "train.jsonl")
    write_manifest_jsonl(test, out / "test.jsonl")
    write_removals_jsonl(removals, out / "removals.jsonl")
    click.echo(
        f"kept {len(kept)} train, removed {len(removals)}, test untouched ({len(test)})",
        err=True,
    )


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--manifests", required=True, type=click.Path(exists=True))
@click.option("--n", default=1000, show_default=True)
@click.option("--out", required=True, type=click.Path())
def sample(config_path, manifests, n, out):
    """Draw weighted multi-dataset training examples (audit dump)."""
    config = SamplerConfig.from_json_file(config_path)
    records = read_manifest_jsonl(manifests)
    by_dataset: dict[str, list] = {}
    for rec in records:
        by_dataset.setdefault(rec.dataset, []).append(rec)
    sampler = ExampleSampler(config, by_dataset)
    draws = [sampler.sample_indexed() for _ in range(n)]
    write_sample_dump([(d, v, ci) for d, v, ci, _ in draws], out)
    click.echo(f"wrote {n} samples to {out}", err=True)


@cli.command(name="eval")
@click.option("--similarities", required=True, type=click.Path(exists=True),
              help="NPY file with the query x gallery similarity matrix.")
@click.option("--ks", default="1,5,10", show_default=True)
@click.option("--out", type=click.Path())
def eval_cmd(similarities, ks, out):
    """Compute R@k / mean rank / median rank for a similarity matrix."""
    matrix = SimilarityMatrix(values=np.load(similarities))
    report = metrics_report_json(
        retrieval_metrics(matrix, [int(k) for k in ks.split(",")])
    )
    if out:
        Path(out).write_text(report + "\n")
    else:
        click.echo(report)


@cli.command()
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--log", "log_path", required=True, type=click.Path())
@click.option("--curve", "curve_path", type=click.Path(exists=True))
@click.option("--query-dataset", default="query", show_default=True)
@click.option("--gallery-dataset", default="gallery", show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(pairs_path, log_path, curve_path, query_dataset, gallery_dataset, host, port):
    """Run the assessment HTTP service."""
    import uvicorn

    from .service import AssessmentState, create_app

    state = AssessmentState.from_files(pairs_path, log_path)
    curve_obj = read_curve_csv(curve_path) if curve_path else None
    app = create_app(
        state,
        curve=curve_obj,
        query_dataset=query_dataset,
        gallery_dataset=gallery_dataset,
    )
    uvicorn.run(app, host=host, port=port)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return 1
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except DupkitError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except FileNotFoundError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
