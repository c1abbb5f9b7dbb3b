"""The studio backend: registry browsing, dataset upload, training/tuning jobs
with streamed progress, pair scoring with explanations, and run persistence.

HTTP + JSON throughout; job events stream as line-delimited JSON. Jobs run on
a bounded in-process worker pool; a restarted service marks any job that was
queued or running as failed ("interrupted") while done jobs stay usable.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from pathlib import Path
from typing import Dict, Iterator, List, Optional

from fastapi import FastAPI, File, HTTPException, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import automl, experiment, runstore
from .dataset import IngestionError, build_pack
from .models import ConfigError, PersistError, get_spec, list_model_specs
from .train_eval import TrainingError, parse_metric

__all__ = ["create_app", "JobManager", "DatasetStore"]

DEFAULT_UPLOAD_LIMIT = 50 * 1024 * 1024

_UPLOAD_FIELDS = (
    "corpus_left",
    "corpus_right",
    "relations_train",
    "relations_valid",
    "relations_test",
)


def _now() -> float:
    return time.time()


def _new_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex[:12]}"


class DatasetStore:
    """Uploaded datasets persisted under <root>/datasets/<id>/."""

    def __init__(self, root: Path, upload_limit: int = DEFAULT_UPLOAD_LIMIT):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self.upload_limit = upload_limit
        self._lock = threading.Lock()
        self._records: Dict[str, dict] = {}
        for record_path in sorted(self.root.glob("*/dataset.json")):
            record = json.loads(record_path.read_text(encoding="utf-8"))
            self._records[record["id"]] = record

    def create(self, files: Dict[str, bytes]) -> dict:
        dataset_id = _new_id("ds")
        ds_dir = self.root / dataset_id
        ds_dir.mkdir(parents=True)
        paths = {}
        for field, payload in files.items():
            if payload is None:
                continue
            if len(payload) > self.upload_limit:
                raise HTTPException(
                    status_code=413,
                    detail=f"{field}: upload exceeds {self.upload_limit} bytes",
                )
            path = ds_dir / f"{field}.tsv"
            path.write_bytes(payload)
            paths[field] = str(path)
        rows = self._validate(paths)
        record = {
            "id": dataset_id,
            "files": paths,
            "rows": rows,
            "created": _now(),
        }
        (ds_dir / "dataset.json").write_text(json.dumps(record, indent=2), encoding="utf-8")
        with self._lock:
            self._records[dataset_id] = record
        return record

    @staticmethod
    def _validate(paths: Dict[str, str]) -> Dict[str, int]:
        # Every referenced split must pass full ingestion.
        rows = {}
        for split in ("train", "valid", "test"):
            key = f"relations_{split}"
            if key in paths:
                pack = build_pack(paths["corpus_left"], paths["corpus_right"], paths[key], split)
                rows[key] = len(pack.relations)
                rows.setdefault("corpus_left", len(pack.left))
                rows.setdefault("corpus_right", len(pack.right))
        return rows

    def get(self, dataset_id: str) -> dict:
        with self._lock:
            record = self._records.get(dataset_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown dataset {dataset_id!r}")
        return record

    def list(self) -> List[dict]:
        with self._lock:
            return sorted(self._records.values(), key=lambda r: r["id"])

    def raw_packs(self, dataset_id: str) -> dict:
        record = self.get(dataset_id)
        packs = {}
        for split in ("train", "valid", "test"):
            key = f"relations_{split}"
            if key in record["files"]:
                packs[split] = build_pack(
                    record["files"]["corpus_left"],
                    record["files"]["corpus_right"],
                    record["files"][key],
                    split,
                )
        return packs


class JobRecord:
    """In-memory job state plus its persisted mirror (job.json, history.jsonl)."""

    def __init__(self, job_id: str, kind: str, model_id: str, dataset_id: str, config: dict):
        self.id = job_id
        self.kind = kind
        self.model_id = model_id
        self.dataset_id = dataset_id
        self.config = config
        self.status = "queued"
        self.history: List[dict] = []
        self.created = _now()
        self.finished: Optional[float] = None
        self.error: Optional[str] = None
        self.cond = threading.Condition()

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "model_id": self.model_id,
            "dataset_id": self.dataset_id,
            "config": self.config,
            "status": self.status,
            "created": self.created,
            "finished": self.finished,
            "error": self.error,
            "events": len(self.history),
        }


class JobManager:
    """Bounded worker pool over a persistent job table."""

    def __init__(self, root: Path, datasets: DatasetStore, max_concurrent_jobs: int = 1):
        from concurrent.futures import ThreadPoolExecutor

        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self.datasets = datasets
        self._jobs: Dict[str, JobRecord] = {}
        self._lock = threading.Lock()
        self._runs: Dict[str, tuple] = {}  # job id -> (model, pipeline)
        self._executor = ThreadPoolExecutor(max_workers=max_concurrent_jobs)
        self._recover()

    # -- persistence -------------------------------------------------------

    def _job_dir(self, job_id: str) -> Path:
        return self.root / job_id

    def _persist(self, job: JobRecord) -> None:
        path = self._job_dir(job.id)
        path.mkdir(parents=True, exist_ok=True)
        runstore.atomic_write(
            path / "job.json", json.dumps(job.to_json(), indent=2).encode("utf-8")
        )

    def _recover(self) -> None:
        # Anything not terminal when the service died is failed ("interrupted").
        for job_path in sorted(self.root.glob("*/job.json")):
            doc = json.loads(job_path.read_text(encoding="utf-8"))
            job = JobRecord(doc["id"], doc["kind"], doc["model_id"], doc["dataset_id"], doc["config"])
            job.created = doc.get("created", _now())
            job.finished = doc.get("finished")
            job.status = doc.get("status", "queued")
            job.error = doc.get("error")
            history_path = job_path.parent / runstore.HISTORY_NAME
            if history_path.exists():
                job.history = [
                    json.loads(line)
                    for line in history_path.read_text(encoding="utf-8").splitlines()
                    if line.strip()
                ]
            if job.status in ("queued", "running"):
                job.status = "failed"
                job.error = "interrupted"
                job.finished = _now()
                terminal = {"status": "failed", "error": "interrupted"}
                job.history.append(terminal)
                runstore.append_history_line(job_path.parent, terminal)
                self._persist(job)
            self._jobs[job.id] = job

    # -- lifecycle ---------------------------------------------------------

    def create(self, kind: str, model_id: str, dataset_id: str, config: dict) -> JobRecord:
        if kind not in ("train", "tune"):
            raise HTTPException(status_code=422, detail=f"unknown job kind {kind!r}")
        config = dict(config or {})
        try:
            spec = get_spec(model_id)
            spec.resolve(config.get("hyper_params", {}))
            for metric in config.get("metrics", []):
                parse_metric(metric)
            if kind == "tune":
                space = automl.space_from_json(config.get("space", {}))
                space.validate_for(model_id)
                parse_metric(config.get("metric", "ndcg@10"))
        except (ConfigError, automl.SearchSpaceError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        self.datasets.get(dataset_id)  # 404 on unknown dataset
        job = JobRecord(_new_id("job"), kind, model_id, dataset_id, config)
        with self._lock:
            self._jobs[job.id] = job
        self._persist(job)
        self._executor.submit(self._run, job)
        return job

    def _emit(self, job: JobRecord, event: dict) -> None:
        with job.cond:
            job.history.append(event)
            job.cond.notify_all()
        runstore.append_history_line(self._job_dir(job.id), event)

    def _run(self, job: JobRecord) -> None:
        with job.cond:
            job.status = "running"
            job.cond.notify_all()
        self._persist(job)
        try:
            if job.kind == "train":
                self._run_train(job)
            else:
                self._run_tune(job)
        except Exception as exc:  # any uncaught failure must terminate the job
            self._finish(job, "failed", str(exc))

    def _run_train(self, job: JobRecord) -> None:
        config = job.config
        seed = int(config.get("seed", 0))
        metrics = tuple(config.get("metrics", experiment.DEFAULT_METRICS))
        packs = self.datasets.raw_packs(job.dataset_id)
        run = experiment.run_experiment(
            job.model_id,
            config.get("hyper_params", {}),
            packs,
            seed=seed,
            metrics=metrics,
            event_sink=lambda event: self._emit(job, event.to_json()),
        )
        if run.result.status != "done":
            self._finish(job, "failed", run.result.error or "training failed")
            return
        runstore.save_run(
            self._job_dir(job.id), run.model, run.pipeline,
            history_lines=None,  # history.jsonl already streamed line by line
            extra={"seed": seed, "metrics": list(metrics)},
        )
        self._runs[job.id] = (run.model, run.pipeline)
        self._finish(job, "done")

    def _run_tune(self, job: JobRecord) -> None:
        config = job.config
        seed = int(config.get("seed", 0))
        result = automl.tune(
            job.model_id,
            automl.space_from_json(config.get("space", {})),
            self.datasets.raw_packs(job.dataset_id),
            trials=int(config.get("trials", 8)),
            seed=seed,
            selection_metric=config.get("metric", "ndcg@10"),
            base_overrides=config.get("hyper_params", {}),
            # "status" is reserved for the terminal stream event
            event_sink=lambda trial: self._emit(job, {
                "trial": trial.index,
                "config": trial.config,
                "trial_status": trial.status,
                "metric": trial.metric,
                "error": trial.error,
            }),
        )
        best = result.best_run
        runstore.save_run(
            self._job_dir(job.id), best.model, best.pipeline,
            history_lines=None,
            extra={"seed": seed, "tune": result.to_json()},
        )
        self._runs[job.id] = (best.model, best.pipeline)
        self._finish(job, "done")

    def _finish(self, job: JobRecord, status: str, error: str | None = None) -> None:
        terminal = {"status": status}
        if error:
            terminal["error"] = error
        # Status flip and terminal event must be one atomic step: a streamer
        # that observes the terminal status must also see the terminal event.
        with job.cond:
            job.status = status
            job.error = error
            job.finished = _now()
            job.history.append(terminal)
            job.cond.notify_all()
        runstore.append_history_line(self._job_dir(job.id), terminal)
        self._persist(job)

    def shutdown(self) -> None:
        self._executor.shutdown(wait=False, cancel_futures=True)
        with self._lock:
            jobs = list(self._jobs.values())
        for job in jobs:
            if job.status in ("queued", "running"):
                self._finish(job, "failed", "interrupted")

    # -- queries -----------------------------------------------------------

    def get(self, job_id: str) -> JobRecord:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return job

    def list(self) -> List[JobRecord]:
        with self._lock:
            return sorted(self._jobs.values(), key=lambda j: j.created)

    def stream(self, job_id: str) -> Iterator[str]:
        """Replay history, then follow until the terminal event."""
        job = self.get(job_id)
        cursor = 0
        while True:
            with job.cond:
                while cursor >= len(job.history) and job.status not in ("done", "failed"):
                    job.cond.wait(timeout=0.5)
                events = job.history[cursor:]
                cursor = len(job.history)
                finished = job.status in ("done", "failed") and cursor == len(job.history)
            for event in events:
                yield json.dumps(event) + "\n"
            if finished:
                return

    def loaded_run(self, job_id: str):
        job = self.get(job_id)
        if job.status != "done":
            raise HTTPException(
                status_code=409, detail=f"job {job_id!r} is {job.status}, not done"
            )
        cached = self._runs.get(job_id)
        if cached is None:
            loaded = runstore.load_run(self._job_dir(job_id))
            cached = (loaded.model, loaded.pipeline)
            self._runs[job_id] = cached
        return cached


class JobRequest(BaseModel):
    kind: str
    model_id: str
    dataset_id: str
    config: dict = {}


class ScoreRequest(BaseModel):
    text_left: str
    text_right: str


class TuneRequest(BaseModel):
    model_id: str
    dataset_id: str
    space: dict
    trials: int = 8
    seed: int = 0
    metric: str = "ndcg@10"


def create_app(
    store_dir,
    max_concurrent_jobs: int = 1,
    upload_limit: int = DEFAULT_UPLOAD_LIMIT,
    ui_dir=None,
) -> FastAPI:
    """Build the studio application rooted at a persistent store directory."""
    from contextlib import asynccontextmanager

    store = Path(store_dir)
    datasets = DatasetStore(store / "datasets", upload_limit)
    jobs = JobManager(store / "jobs", datasets, max_concurrent_jobs)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        jobs.shutdown()

    app = FastAPI(title="textmatch studio", version="0.1.0", lifespan=lifespan)
    app.state.jobs = jobs
    app.state.datasets = datasets

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException):
        return JSONResponse(
            status_code=exc.status_code,
            content={"error": str(exc.detail), "detail": str(exc.detail)},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"error": "invalid request", "detail": exc.errors()},
        )

    @app.exception_handler(IngestionError)
    async def ingestion_error(request: Request, exc: IngestionError):
        return JSONResponse(status_code=422, content={"error": str(exc), "detail": str(exc)})

    @app.exception_handler(PersistError)
    async def persist_error(request: Request, exc: PersistError):
        return JSONResponse(status_code=500, content={"error": str(exc), "detail": str(exc)})

    @app.get("/api/models")
    def api_models():
        return [spec.summary() for spec in list_model_specs()]

    @app.get("/api/models/{model_id}")
    def api_model(model_id: str):
        try:
            return get_spec(model_id).to_json()
        except ConfigError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    @app.post("/api/datasets")
    async def api_create_dataset(
        corpus_left: UploadFile = File(...),
        corpus_right: UploadFile = File(...),
        relations_train: UploadFile = File(...),
        relations_valid: UploadFile = File(None),
        relations_test: UploadFile = File(None),
    ):
        uploads = {
            "corpus_left": corpus_left,
            "corpus_right": corpus_right,
            "relations_train": relations_train,
            "relations_valid": relations_valid,
            "relations_test": relations_test,
        }
        files = {}
        for field in _UPLOAD_FIELDS:
            upload = uploads[field]
            files[field] = await upload.read() if upload is not None else None
        return datasets.create(files)

    @app.get("/api/datasets")
    def api_list_datasets():
        return datasets.list()

    @app.post("/api/jobs")
    def api_create_job(req: JobRequest):
        return jobs.create(req.kind, req.model_id, req.dataset_id, req.config).to_json()

    @app.get("/api/jobs")
    def api_list_jobs():
        return [job.to_json() for job in jobs.list()]

    @app.get("/api/jobs/{job_id}")
    def api_get_job(job_id: str):
        return jobs.get(job_id).to_json()

    @app.get("/api/jobs/{job_id}/events")
    def api_stream_events(job_id: str):
        jobs.get(job_id)  # 404 before the stream starts
        return StreamingResponse(jobs.stream(job_id), media_type="application/x-ndjson")

    @app.post("/api/jobs/{job_id}/score")
    def api_score(job_id: str, req: ScoreRequest):
        if not req.text_left.strip() or not req.text_right.strip():
            raise HTTPException(status_code=422, detail="texts must be non-empty")
        model, pipeline = jobs.loaded_run(job_id)
        try:
            return experiment.explain_texts(model, pipeline, req.text_left, req.text_right)
        except (ConfigError, TrainingError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None

    @app.post("/api/tune")
    def api_tune(req: TuneRequest):
        config = {
            "space": req.space,
            "trials": req.trials,
            "seed": req.seed,
            "metric": req.metric,
        }
        return jobs.create("tune", req.model_id, req.dataset_id, config).to_json()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="studio-ui")

    return app
