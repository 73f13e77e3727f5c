"""Command-line interface: index, serve, ask, verify, eval-scifact,
export-feedback."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import (
    EngineConfig,
    load_config,
    make_embedding_backend,
    nli_backend_from_spec,
)
from .corpus import load_corpus
from .engine import Engine
from .errors import RefqaError
from .feedback import FeedbackKind, FeedbackStore, export_training_data
from .retrieval import (
    build_lexical_index,
    embed_corpus,
    save_lexical_index,
    save_vector_index,
)
from .scifact import clean_dataset, class_distribution, evaluate_backend, load_scifact, split_pairs
from .verification import verify_answer
from .claims import parse_answer


@click.group()
def main() -> None:
    """Referenced scientific question answering with claim verification."""


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--embedding", default="stub", show_default=True,
              help="Embedding backend: 'stub', 'stub:<dim>', or a URL.")
@click.option("--dimension", default=128, show_default=True, type=int)
@click.option("--synonyms", default="", help="JSON synonym table for the stub.")
@click.option("--k1", default=1.2, show_default=True, type=float)
@click.option("--b", default=0.75, show_default=True, type=float)
def index(corpus_path, out_dir, embedding, dimension, synonyms, k1, b):
    """Build and persist the lexical and vector indexes."""
    corpus = load_corpus(corpus_path)
    if corpus.skipped:
        click.echo(f"skipped {len(corpus.skipped)} malformed records:", err=True)
        for record in corpus.skipped:
            click.echo(f"  line {record.line_number}: {record.reason}", err=True)
    config = EngineConfig(
        corpus_path=str(corpus_path),
        embedding_backend=embedding,
        embedding_dimension=dimension,
        embedding_synonyms_path=synonyms,
    )
    backend = make_embedding_backend(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lexical = build_lexical_index(corpus, k1=k1, b=b)
    save_lexical_index(lexical, out / "lexical.jsonl")
    vector = embed_corpus(corpus, backend)
    save_vector_index(vector, out / "vector.jsonl")
    click.echo(
        f"indexed {len(corpus)} documents: "
        f"{len(lexical.postings)} terms, {vector.dimension}-d vectors -> {out}"
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
def serve(config_path, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    config = load_config(config_path)
    engine = Engine(config)
    app = create_app(engine)
    uvicorn.run(app, host=host or config.host, port=port or config.port)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--question", required=True)
@click.option("--k", default=None, type=int)
@click.option("--lexical-weight", default=None, type=float)
def ask(config_path, question, k, lexical_weight):
    """Run the full pipeline once and print the response as JSON."""
    engine = Engine(load_config(config_path))
    try:
        response = engine.ask(question, k=k, lexical_weight=lexical_weight)
    except RefqaError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(json.dumps(response, indent=2))


@main.command()
@click.option("--answer-file", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--backend", default="baseline", show_default=True,
              help="NLI backend: 'baseline', 'scripted:<fixture>', or a URL.")
@click.option("--context-ids", default="",
              help="Comma-separated doc ids that formed the generation context; "
                   "defaults to the whole corpus in file order.")
@click.option("--highlight-k", default=3, show_default=True, type=int)
@click.option("--out", default="-", help="Output path, '-' for stdout.")
def verify(answer_file, corpus_path, backend, context_ids, highlight_k, out):
    """Verify a raw answer file: one JSON record per claim."""
    corpus = load_corpus(corpus_path)
    if context_ids:
        context = []
        for doc_id in context_ids.split(","):
            doc = corpus.get(doc_id.strip())
            if doc is None:
                raise click.ClickException(f"context doc {doc_id!r} not in corpus")
            context.append(doc)
    else:
        context = list(corpus)
    raw = Path(answer_file).read_text(encoding="utf-8")
    parsed = parse_answer(raw, context)
    verified = verify_answer(
        parsed, corpus, nli_backend_from_spec(backend), highlight_k=highlight_k
    )
    sink = sys.stdout if out == "-" else Path(out).open("w", encoding="utf-8")
    try:
        for idx, result in enumerate(verified.results):
            record = {
                "claim_index": idx,
                "text": result.claim.text,
                "references": result.claim.references,
                "status": result.status.value,
                "verdicts": [
                    {
                        "doc_id": pv.doc_id,
                        "label": pv.verdict.label.value,
                        "confidence": pv.verdict.confidence,
                        "unknown_source": pv.unknown_source,
                        "numeric_divergence": pv.numeric_divergence,
                    }
                    for pv in result.verdicts
                ],
                "highlights": [
                    {
                        "doc_id": h.doc_id,
                        "sentences": [
                            {"text": t, "score": s} for t, s in h.sentences
                        ],
                    }
                    for h in result.highlights
                ],
            }
            sink.write(json.dumps(record) + "\n")
    finally:
        if sink is not sys.stdout:
            sink.close()


@main.command("eval-scifact")
@click.option("--claims", "claims_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--backend", default="baseline", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--eval-fraction", default=1.0, show_default=True, type=float,
              help="Evaluate on a random fraction of the cleaned pairs.")
@click.option("--split-seed", default=13, show_default=True, type=int)
@click.option("--concurrency", default=4, show_default=True, type=int)
def eval_scifact(claims_path, corpus_path, backend, out_path, eval_fraction,
                 split_seed, concurrency):
    """Evaluate an NLI backend on a SciFact-style dataset and write the
    metrics report (text table, JSON record, and figures)."""
    from .report import render_text_table, save_report

    loaded = load_scifact(claims_path, corpus_path)
    if loaded.skipped:
        click.echo(f"skipped {len(loaded.skipped)} pairs citing unknown docs", err=True)
    if loaded.conflicts:
        click.echo(
            f"{len(loaded.conflicts)} (claim, doc) pairs carry conflicting evidence",
            err=True,
        )
    pairs = clean_dataset(loaded.pairs)
    click.echo(f"{len(loaded.pairs)} raw pairs -> {len(pairs)} after cleaning")
    if eval_fraction < 1.0:
        _, pairs = split_pairs(pairs, eval_fraction, split_seed)
        click.echo(f"evaluating on {len(pairs)} pairs (fraction={eval_fraction})")
    distribution = class_distribution(pairs)
    click.echo(
        "class distribution: "
        + ", ".join(f"{k.value}={v:.2f}" for k, v in distribution.items())
    )
    report = evaluate_backend(
        nli_backend_from_spec(backend), pairs, loaded.corpus, concurrency=concurrency
    )
    click.echo(render_text_table(report))
    paths = save_report(report, out_path)
    for kind, path in paths.items():
        click.echo(f"wrote {kind}: {path}")


@main.command("export-feedback")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--kind", type=click.Choice([k.value for k in FeedbackKind]),
              default=None, help="Export only one record kind.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--corpus", "corpus_path", default=None, type=click.Path(exists=True),
              help="Corpus used to resolve bracket-number references.")
def export_feedback(store_path, kind, out_path, corpus_path):
    """Export recorded feedback as line-delimited training data."""
    store = FeedbackStore(store_path)
    corpus = load_corpus(corpus_path) if corpus_path else None
    lines = export_training_data(
        store, FeedbackKind(kind) if kind else None, corpus=corpus
    )
    Path(out_path).write_text(
        "".join(line + "\n" for line in lines), encoding="utf-8"
    )
    click.echo(f"wrote {len(lines)} records to {out_path}")


if __name__ == "__main__":
    main()
