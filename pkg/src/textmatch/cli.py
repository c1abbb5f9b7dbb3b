"""Command-line front door mirroring the studio flows.

Exit codes: 0 success, 2 usage/configuration error, 1 runtime failure.
Run manifests are single JSON documents naming the model, hyper-parameter
overrides, dataset paths, and (for tuning) the search space.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import automl, experiment, runstore, toygen
from .dataset import IngestionError, build_pack
from .models import ConfigError, PersistError, get_spec
from .text_pipeline import PipelineError
from .train_eval import TrainingError, evaluate

_CONFIG_ERRORS = (ConfigError, automl.SearchSpaceError, PipelineError, ValueError, KeyError)
_RUNTIME_ERRORS = (IngestionError, PersistError, TrainingError, automl.TuneError, OSError)


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_manifest(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        _fail(f"manifest not found: {path}", 2)
    except json.JSONDecodeError as exc:
        _fail(f"manifest is not valid JSON: {exc}", 2)
    if not isinstance(doc, dict) or "model_id" not in doc:
        _fail("manifest must be a JSON object with a 'model_id' field", 2)
    return doc


def _validated_overrides(doc: dict, verbose: bool = False) -> dict:
    overrides = doc.get("hyper_params", {})
    resolved = get_spec(doc["model_id"]).resolve(overrides)  # schema check before any work
    if verbose:
        click.echo(f"resolved config for {doc['model_id']}: {json.dumps(resolved, sort_keys=True)}", err=True)
    return overrides


def _raw_packs(dataset: dict) -> dict:
    required = ("corpus_left", "corpus_right", "relations_train")
    missing = [k for k in required if k not in dataset]
    if missing:
        raise ConfigError(f"manifest dataset section missing: {', '.join(missing)}")
    packs = {}
    for split in ("train", "valid", "test"):
        rel_path = dataset.get(f"relations_{split}")
        if rel_path:
            packs[split] = build_pack(
                dataset["corpus_left"], dataset["corpus_right"], rel_path, split=split
            )
    return packs


@click.group()
@click.option("--seed", type=int, default=None, help="Override any manifest seed.")
@click.option("--verbose", is_flag=True, default=False)
@click.pass_context
def main(ctx, seed, verbose):
    """Train, evaluate, tune, score, and serve text matching models."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["verbose"] = verbose


@main.command("gen-toy")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--queries", "n_queries", type=int, default=50, show_default=True)
@click.option("--docs", "docs_per_query", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.pass_context
def gen_toy(ctx, out_dir, n_queries, docs_per_query, seed):
    """Generate a synthetic token-overlap dataset."""
    if n_queries < 1 or docs_per_query < 1:
        _fail("--queries and --docs must be >= 1", 2)
    seed = ctx.obj["seed"] if ctx.obj["seed"] is not None else seed
    try:
        paths = toygen.generate_toy_dataset(out_dir, n_queries, docs_per_query, seed)
    except OSError as exc:
        _fail(f"cannot write dataset: {exc}", 1)
    click.echo(json.dumps({name: str(p) for name, p in paths.items()}, indent=2))


@main.command("train")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
def train_cmd(ctx, manifest_path, out_dir):
    """Train per a manifest; print one JSON line per epoch; write artifacts."""
    doc = _load_manifest(manifest_path)
    seed = ctx.obj["seed"] if ctx.obj["seed"] is not None else int(doc.get("seed", 0))
    metrics = tuple(doc.get("metrics", experiment.DEFAULT_METRICS))
    try:
        overrides = _validated_overrides(doc, verbose=ctx.obj["verbose"])
        packs = _raw_packs(doc.get("dataset", {}))
    except _CONFIG_ERRORS as exc:
        _fail(str(exc), 2)
    except _RUNTIME_ERRORS as exc:
        _fail(str(exc), 1)

    history_lines = []

    def sink(event):
        line = event.to_json()
        history_lines.append(line)
        click.echo(json.dumps(line))

    try:
        run = experiment.run_experiment(
            doc["model_id"], overrides, packs,
            seed=seed, metrics=metrics,
            embedding_path=doc.get("dataset", {}).get("embeddings"),
            event_sink=sink,
        )
    except _CONFIG_ERRORS as exc:
        _fail(str(exc), 2)
    except _RUNTIME_ERRORS as exc:
        _fail(str(exc), 1)
    terminal = {"status": run.result.status}
    if run.result.error:
        terminal["error"] = run.result.error
    history_lines.append(terminal)
    click.echo(json.dumps(terminal))
    if run.result.status != "done":
        _fail(run.result.error or "training failed", 1)
    runstore.save_run(
        out_dir, run.model, run.pipeline, history_lines,
        extra={"seed": seed, "metrics": list(metrics)},
    )


@main.command("evaluate")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=False))
@click.option("--corpus-left", required=True, type=click.Path(exists=False))
@click.option("--corpus-right", required=True, type=click.Path(exists=False))
@click.option("--relations", required=True, type=click.Path(exists=False))
@click.option("--metrics", default="ndcg@10,map", show_default=True,
              help="Comma-separated metric names.")
def evaluate_cmd(run_dir, corpus_left, corpus_right, relations, metrics):
    """Evaluate stored run artifacts on a dataset; print metric JSON."""
    names = [m.strip() for m in metrics.split(",") if m.strip()]
    try:
        loaded = runstore.load_run(run_dir)
        pack = build_pack(corpus_left, corpus_right, relations, split="eval")
        processed = pack.map_texts(loaded.pipeline.transform)
        values = evaluate(loaded.model, processed, names)
    except ValueError as exc:
        _fail(str(exc), 2)
    except _RUNTIME_ERRORS as exc:
        _fail(str(exc), 1)
    click.echo(json.dumps(values, sort_keys=True))


@main.command("tune")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
def tune_cmd(ctx, manifest_path, out_dir):
    """Random-search the manifest's space; write the trial table and best run."""
    doc = _load_manifest(manifest_path)
    seed = ctx.obj["seed"] if ctx.obj["seed"] is not None else int(doc.get("seed", 0))
    if "space" not in doc:
        _fail("tune manifest needs a 'space' section", 2)
    try:
        space = automl.space_from_json(doc["space"])
        overrides = _validated_overrides(doc, verbose=ctx.obj["verbose"])
        packs = _raw_packs(doc.get("dataset", {}))
        result = automl.tune(
            doc["model_id"], space, packs,
            trials=int(doc.get("trials", 8)),
            seed=seed,
            selection_metric=doc.get("metric", "ndcg@10"),
            base_overrides=overrides,
            embedding_path=doc.get("dataset", {}).get("embeddings"),
        )
    except _CONFIG_ERRORS as exc:
        _fail(str(exc), 2)
    except _RUNTIME_ERRORS as exc:
        _fail(str(exc), 1)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runstore.atomic_write(
        out / "trials.json",
        json.dumps(result.to_json(), indent=2, sort_keys=True).encode("utf-8"),
    )
    best = result.best_run
    history = [e.to_json() for e in best.result.history] + [{"status": "done"}]
    runstore.save_run(out / "best", best.model, best.pipeline, history,
                      extra={"seed": seed})
    click.echo(json.dumps({
        "best_index": result.best_index,
        "best_config": result.trials[result.best_index].config,
        "best_metric": result.trials[result.best_index].metric,
    }, sort_keys=True))


@main.command("score")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=False))
@click.option("--left", "text_left", required=True)
@click.option("--right", "text_right", required=True)
@click.option("--explain", "explain_flag", is_flag=True, default=False)
def score_cmd(run_dir, text_left, text_right, explain_flag):
    """Score a text pair with stored run artifacts."""
    if not text_left.strip() or not text_right.strip():
        _fail("both --left and --right must be non-empty", 2)
    try:
        loaded = runstore.load_run(run_dir)
        if explain_flag:
            doc = experiment.explain_texts(loaded.model, loaded.pipeline, text_left, text_right)
        else:
            doc = {"score": loaded.score_texts(text_left, text_right)}
    except _RUNTIME_ERRORS as exc:
        _fail(str(exc), 1)
    click.echo(json.dumps(doc))


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--store", "store_dir", required=True, type=click.Path(file_okay=False))
@click.option("--max-jobs", type=int, default=1, show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False), default=None,
              help="Directory of built studio assets to serve at /.")
def serve_cmd(host, port, store_dir, max_jobs, ui_dir):
    """Run the studio service over HTTP."""
    import uvicorn

    from .service import create_app

    app = create_app(store_dir, max_concurrent_jobs=max_jobs, ui_dir=ui_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except (OSError, SystemExit) as exc:
        _fail(f"server failed: {exc}", 1)


if __name__ == "__main__":
    main()
