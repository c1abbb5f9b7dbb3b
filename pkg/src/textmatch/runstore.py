"""Run artifact persistence: manifest.json, weights.bin, history.jsonl.

Writes are atomic (temp file + rename), so an interrupted run never leaves a
half-written weights blob. A loaded run reconstructs a model + fitted
pipeline that score raw text identically to the original.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .models import MatchingModel, PersistError, load_model, save_model
from .text_pipeline import Pipeline

__all__ = ["LoadedRun", "atomic_write", "save_run", "load_run", "append_history_line"]

MANIFEST_NAME = "manifest.json"
WEIGHTS_NAME = "weights.bin"
HISTORY_NAME = "history.jsonl"


@dataclass
class LoadedRun:
    model: MatchingModel
    pipeline: Pipeline
    manifest: dict

    def score_texts(self, text_left: str, text_right: str) -> float:
        return self.model.score(
            self.pipeline.transform(text_left), self.pipeline.transform(text_right)
        )


def atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def save_run(
    run_dir,
    model: MatchingModel,
    pipeline: Pipeline,
    history_lines: Iterable[dict] | None = None,
    extra: dict | None = None,
) -> None:
    """Persist a trained model with its fitted pipeline (and history, if any)."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest, blob = save_model(model)
    manifest["pipeline"] = pipeline.to_json()
    if extra:
        manifest.update(extra)
    atomic_write(run_dir / WEIGHTS_NAME, blob)
    atomic_write(
        run_dir / MANIFEST_NAME,
        json.dumps(manifest, indent=2, sort_keys=True).encode("utf-8"),
    )
    if history_lines is not None:
        payload = "".join(json.dumps(line) + "\n" for line in history_lines)
        atomic_write(run_dir / HISTORY_NAME, payload.encode("utf-8"))


def append_history_line(run_dir, line: dict) -> None:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / HISTORY_NAME, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(line) + "\n")
        fh.flush()


def load_run(run_dir) -> LoadedRun:
    """Rebuild the model and pipeline from persisted artifacts."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / MANIFEST_NAME
    weights_path = run_dir / WEIGHTS_NAME
    if not manifest_path.exists():
        raise PersistError(f"missing {manifest_path}")
    if not weights_path.exists():
        raise PersistError(f"missing {weights_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PersistError(f"corrupt {manifest_path}: {exc}") from None
    blob = weights_path.read_bytes()
    try:
        model = load_model(manifest, blob)
    except PersistError as exc:
        raise PersistError(f"{weights_path}: {exc}") from None
    pipeline_doc = manifest.get("pipeline")
    if pipeline_doc is None:
        raise PersistError(f"{manifest_path}: manifest has no pipeline entry")
    pipeline = Pipeline.from_json(pipeline_doc)
    return LoadedRun(model=model, pipeline=pipeline, manifest=manifest)
