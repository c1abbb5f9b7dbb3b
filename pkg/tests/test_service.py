"""Studio service tests over the HTTP surface (no network, TestClient)."""

import json
import time

import pytest
from fastapi.testclient import TestClient

from textmatch.service import create_app


@pytest.fixture()
def client(tmp_path):
    app = create_app(tmp_path / "store", max_concurrent_jobs=1)
    with TestClient(app) as c:
        yield c


def _upload_files(toy_paths):
    return {
        name: (f"{name}.tsv", open(toy_paths[name], "rb"), "text/tab-separated-values")
        for name in ("corpus_left", "corpus_right", "relations_train",
                     "relations_valid", "relations_test")
    }


@pytest.fixture()
def dataset_id(client, toy_paths):
    response = client.post("/api/datasets", files=_upload_files(toy_paths))
    assert response.status_code == 200, response.text
    return response.json()["id"]


def _wait_done(client, job_id, timeout=120.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        record = client.get(f"/api/jobs/{job_id}").json()
        if record["status"] in ("done", "failed"):
            return record
        time.sleep(0.05)
    raise AssertionError("job did not finish in time")


def _train_config(epochs=2, model_extra=None):
    return {
        "hyper_params": {"epochs": epochs, **(model_extra or {})},
        "seed": 3,
        "metrics": ["ndcg@10"],
    }


class TestModels:
    def test_list_in_id_order_with_families(self, client):
        entries = client.get("/api/models").json()
        assert [e["id"] for e in entries] == ["drmm", "dssm", "knrm"]
        assert all(e["family"] in ("representation", "interaction") for e in entries)
        assert all(e["description"] for e in entries)

    def test_repeated_calls_identical(self, client):
        assert client.get("/api/models").json() == client.get("/api/models").json()

    def test_detail_includes_schema(self, client):
        doc = client.get("/api/models/knrm").json()
        names = {hp["name"] for hp in doc["schema"]}
        assert {"kernels", "sigma", "learning_rate", "epochs"} <= names
        defaults = {hp["name"]: hp["default"] for hp in doc["schema"]}
        assert defaults["kernels"] == 11

    def test_unknown_model_404(self, client):
        response = client.get("/api/models/nosuch")
        assert response.status_code == 404
        assert "error" in response.json()


class TestDatasets:
    def test_upload_reports_row_counts(self, client, toy_paths):
        response = client.post("/api/datasets", files=_upload_files(toy_paths))
        record = response.json()
        assert record["rows"]["corpus_left"] == 20
        assert record["rows"]["relations_train"] == 140
        assert record["rows"]["relations_valid"] == 40

    def test_malformed_relations_name_line(self, client, toy_paths, tmp_path):
        bad = tmp_path / "bad.tsv"
        bad.write_text("1\tq1\td1\nnonsense\n", encoding="utf-8")
        files = _upload_files(toy_paths)
        files["relations_train"] = ("bad.tsv", open(bad, "rb"), "text/plain")
        response = client.post("/api/datasets", files=files)
        assert response.status_code == 422
        assert "line 2" in response.json()["error"]

    def test_duplicate_upload_gets_new_id(self, client, toy_paths):
        first = client.post("/api/datasets", files=_upload_files(toy_paths)).json()
        second = client.post("/api/datasets", files=_upload_files(toy_paths)).json()
        assert first["id"] != second["id"]
        listing = client.get("/api/datasets").json()
        assert {first["id"], second["id"]} <= {d["id"] for d in listing}

    def test_oversized_upload_rejected(self, tmp_path, toy_paths):
        app = create_app(tmp_path / "small-store", upload_limit=64)
        with TestClient(app) as small_client:
            response = small_client.post("/api/datasets", files=_upload_files(toy_paths))
            assert response.status_code == 413


class TestJobs:
    def test_unknown_model_rejected_before_enqueue(self, client, dataset_id):
        response = client.post("/api/jobs", json={
            "kind": "train", "model_id": "nosuch", "dataset_id": dataset_id, "config": {},
        })
        assert response.status_code == 422
        assert "nosuch" in response.json()["error"]

    def test_unknown_dataset_404(self, client):
        response = client.post("/api/jobs", json={
            "kind": "train", "model_id": "knrm", "dataset_id": "ds-none", "config": {},
        })
        assert response.status_code == 404

    def test_invalid_hyper_parameter_listed(self, client, dataset_id):
        response = client.post("/api/jobs", json={
            "kind": "train", "model_id": "knrm", "dataset_id": dataset_id,
            "config": {"hyper_params": {"bogus_knob": 3}},
        })
        assert response.status_code == 422
        assert "bogus_knob" in response.json()["error"]

    def test_lifecycle_and_event_stream(self, client, dataset_id):
        created = client.post("/api/jobs", json={
            "kind": "train", "model_id": "knrm", "dataset_id": dataset_id,
            "config": _train_config(epochs=3),
        }).json()
        assert created["status"] in ("queued", "running")
        record = _wait_done(client, created["id"])
        assert record["status"] == "done"

        def read_stream():
            with client.stream("GET", f"/api/jobs/{created['id']}/events") as response:
                return [json.loads(line) for line in response.iter_lines() if line]

        events = read_stream()
        epoch_events = [e for e in events if "epoch" in e]
        assert [e["epoch"] for e in epoch_events] == [1, 2, 3]
        assert all("loss" in e and "metrics" in e and "seconds" in e for e in epoch_events)
        assert events[-1] == {"status": "done"}
        assert len(events) == 4
        # a second stream of a finished job replays identically
        assert read_stream() == events

    def test_stream_matches_persisted_history(self, client, dataset_id, tmp_path):
        created = client.post("/api/jobs", json={
            "kind": "train", "model_id": "knrm", "dataset_id": dataset_id,
            "config": _train_config(epochs=2),
        }).json()
        _wait_done(client, created["id"])
        with client.stream("GET", f"/api/jobs/{created['id']}/events") as response:
            streamed = [json.loads(line) for line in response.iter_lines() if line]
        job_dir = client.app.state.jobs._job_dir(created["id"])
        stored = [json.loads(l) for l in (job_dir / "history.jsonl").read_text().splitlines()]
        assert streamed == stored

    def test_unknown_job_404(self, client):
        assert client.get("/api/jobs/job-none").status_code == 404
        assert client.get("/api/jobs/job-none/events").status_code == 404


class TestScorePair:
    @pytest.fixture()
    def done_job(self, client, dataset_id):
        created = client.post("/api/jobs", json={
            "kind": "train", "model_id": "knrm", "dataset_id": dataset_id,
            "config": _train_config(epochs=1),
        }).json()
        _wait_done(client, created["id"])
        return created["id"]

    def test_score_with_interaction_explanation(self, client, done_job, toy_packs):
        docs = list(toy_packs["train"].right.values())
        payload = {"text_left": docs[0], "text_right": docs[1]}
        response = client.post(f"/api/jobs/{done_job}/score", json=payload)
        assert response.status_code == 200, response.text
        doc = response.json()
        assert isinstance(doc["score"], float)
        exp = doc["explanation"]
        assert exp["family"] == "interaction"
        assert len(exp["matrix"]) == len(exp["left_tokens"])
        assert len(exp["matrix"][0]) == len(exp["right_tokens"])
        assert len(exp["weights"]) == 11
        # determinism
        again = client.post(f"/api/jobs/{done_job}/score", json=payload).json()
        assert again["score"] == doc["score"]

    def test_score_not_done_conflict(self, client, dataset_id):
        created = client.post("/api/jobs", json={
            "kind": "train", "model_id": "knrm", "dataset_id": dataset_id,
            "config": _train_config(epochs=30),
        }).json()
        response = client.post(f"/api/jobs/{created['id']}/score",
                               json={"text_left": "a", "text_right": "b"})
        assert response.status_code == 409
        _wait_done(client, created["id"])

    def test_empty_text_rejected(self, client, done_job):
        response = client.post(f"/api/jobs/{done_job}/score",
                               json={"text_left": " ", "text_right": "b"})
        assert response.status_code == 422

    def test_dssm_identical_texts(self, client, dataset_id):
        created = client.post("/api/jobs", json={
            "kind": "train", "model_id": "dssm", "dataset_id": dataset_id,
            "config": _train_config(epochs=1, model_extra={
                "hidden1": 8, "hidden2": 6, "repr_dim": 4}),
        }).json()
        _wait_done(client, created["id"])
        doc = client.post(f"/api/jobs/{created['id']}/score",
                          json={"text_left": "same text", "text_right": "same text"}).json()
        assert doc["score"] == pytest.approx(1.0, abs=1e-9)
        exp = doc["explanation"]
        assert exp["family"] == "representation"
        assert exp["left_vector"] == exp["right_vector"]
        assert len(exp["left_vector"]) == 4

    def test_score_survives_restart_via_artifacts(self, client, done_job, tmp_path, toy_packs):
        docs = list(toy_packs["train"].right.values())
        payload = {"text_left": docs[0], "text_right": docs[1]}
        before = client.post(f"/api/jobs/{done_job}/score", json=payload).json()
        store = client.app.state.jobs.root.parent
        fresh = create_app(store, max_concurrent_jobs=1)
        with TestClient(fresh) as second_client:
            record = second_client.get(f"/api/jobs/{done_job}").json()
            assert record["status"] == "done"
            after = second_client.post(f"/api/jobs/{done_job}/score", json=payload).json()
        assert after["score"] == before["score"]


class TestTuneEndpoint:
    def test_tune_job_streams_trials(self, client, dataset_id):
        created = client.post("/api/tune", json={
            "model_id": "knrm", "dataset_id": dataset_id,
            "space": {"learning_rate": {"kind": "categorical", "items": [0.01]}},
            "trials": 2, "seed": 0, "metric": "ndcg@10",
        }).json()
        assert created["kind"] == "tune"
        record = _wait_done(client, created["id"])
        assert record["status"] == "done", record
        with client.stream("GET", f"/api/jobs/{created['id']}/events") as response:
            events = [json.loads(line) for line in response.iter_lines() if line]
        trial_events = [e for e in events if "trial" in e]
        assert [e["trial"] for e in trial_events] == [0, 1]
        assert events[-1] == {"status": "done"}

    def test_bad_space_rejected(self, client, dataset_id):
        response = client.post("/api/tune", json={
            "model_id": "knrm", "dataset_id": dataset_id,
            "space": {"bogus": {"kind": "int_uniform", "lo": 1, "hi": 2}},
            "trials": 1, "seed": 0, "metric": "ndcg@10",
        })
        assert response.status_code == 422


class TestRestartRecovery:
    def test_interrupted_jobs_marked_failed(self, tmp_path, toy_paths):
        store = tmp_path / "store"
        app = create_app(store, max_concurrent_jobs=1)
        with TestClient(app) as c:
            dataset = c.post("/api/datasets", files=_upload_files(toy_paths)).json()
            created = c.post("/api/jobs", json={
                "kind": "train", "model_id": "knrm", "dataset_id": dataset["id"],
                "config": _train_config(epochs=1),
            }).json()
            _wait_done(c, created["id"])
        # forge a job that was mid-flight when the process died
        zombie_dir = store / "jobs" / "job-zombie"
        zombie_dir.mkdir(parents=True)
        (zombie_dir / "job.json").write_text(json.dumps({
            "id": "job-zombie", "kind": "train", "model_id": "knrm",
            "dataset_id": dataset["id"], "config": {}, "status": "running",
            "created": 0.0, "finished": None, "error": None, "events": 0,
        }), encoding="utf-8")
        fresh = create_app(store, max_concurrent_jobs=1)
        with TestClient(fresh) as c2:
            zombie = c2.get("/api/jobs/job-zombie").json()
            assert zombie["status"] == "failed"
            assert zombie["error"] == "interrupted"
            done = c2.get(f"/api/jobs/{created['id']}").json()
            assert done["status"] == "done"
            with c2.stream("GET", "/api/jobs/job-zombie/events") as response:
                events = [json.loads(line) for line in response.iter_lines() if line]
            assert events[-1] == {"status": "failed", "error": "interrupted"}


class TestConcurrencyBound:
    def test_at_most_max_running(self, tmp_path, toy_paths):
        app = create_app(tmp_path / "store", max_concurrent_jobs=1)
        with TestClient(app) as c:
            dataset = c.post("/api/datasets", files=_upload_files(toy_paths)).json()
            ids = [
                c.post("/api/jobs", json={
                    "kind": "train", "model_id": "knrm", "dataset_id": dataset["id"],
                    "config": _train_config(epochs=2),
                }).json()["id"]
                for _ in range(3)
            ]
            deadline = time.monotonic() + 120
            while time.monotonic() < deadline:
                records = c.get("/api/jobs").json()
                running = [r for r in records if r["status"] == "running"]
                assert len(running) <= 1
                if all(r["status"] == "done" for r in records if r["id"] in ids):
                    break
                time.sleep(0.02)
            records = {r["id"]: r for r in c.get("/api/jobs").json()}
            assert all(records[i]["status"] == "done" for i in ids)
