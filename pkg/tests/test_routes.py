import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from main import app
from schemas import EngineConfig, Scenario
from solver.signal_model import steering_matrix
from utils.background_tasks import sweep_job_manager
from utils.harness import run_trial


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as test_client:
        yield test_client


def wait_for_sweep(client, sweep_id, timeout=120.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        body = client.get(f"/sweeps/{sweep_id}").json()
        if body["status"] in ("finished", "failed"):
            return body
        time.sleep(0.2)
    raise AssertionError(f"Sweep {sweep_id} did not finish in {timeout}s")


class TestRoot:
    def test_root(self, client):
        response = client.get("/")
        assert response.status_code == 200
        assert "docs" in response.json()

    def test_health(self, client):
        response = client.get("/health")
        body = response.json()
        assert body["status"] == "healthy"
        assert body["active_sweeps"] >= 0
        assert "X-Process-Time" in response.headers


class TestSolverRoutes:
    def test_estimate_single_tone(self, client):
        data = steering_matrix([0.3], np.arange(8)) @ np.array([[1.0 + 0.5j]])
        payload = {
            "measurements": {"real": data.real.tolist(), "imag": data.imag.tolist()},
            "engine": {"population_size": 20, "max_generations": 60},
            "seed": 2023,
        }
        response = client.post("/solver/estimate", json=payload)
        assert response.status_code == 200
        body = response.json()
        assert body["model_order"] == len(body["frequencies"])
        assert body["evaluations"] <= 5000
        assert body["front"]

    def test_estimate_rejects_single_row(self, client):
        payload = {"measurements": {"real": [[1.0]]}}
        assert client.post("/solver/estimate", json=payload).status_code == 422

    def test_estimate_rejects_ragged_rows(self, client):
        payload = {"measurements": {"real": [[1.0, 2.0], [1.0]]}}
        assert client.post("/solver/estimate", json=payload).status_code == 422

    def test_trial(self, client):
        payload = {
            "scenario": {"num_sensors": 8, "true_order": 1, "num_snapshots": 1},
            "engine": {"population_size": 8, "max_generations": 3},
            "seed": 4,
        }
        response = client.post("/solver/trial", json=payload)
        assert response.status_code == 200
        body = response.json()
        assert body["true_order"] == 1
        assert body["seed"] == 4
        assert len(body["true_frequencies"]) == 1

    def test_trial_without_seed_uses_scenario_seed(self, client):
        scenario = {"num_sensors": 8, "true_order": 2, "num_snapshots": 2, "rng_seed": 77}
        engine = {"population_size": 8, "max_generations": 3}
        body = client.post("/solver/trial", json={"scenario": scenario, "engine": engine}).json()
        assert body["seed"] == 77

        expected = run_trial(Scenario(**scenario), EngineConfig(**engine), seed=77)
        assert body["true_frequencies"] == pytest.approx(expected.true_frequencies.tolist())

    def test_trial_rejects_invalid_scenario(self, client):
        payload = {"scenario": {"num_sensors": 4, "true_order": 4}}
        assert client.post("/solver/trial", json=payload).status_code == 422


class TestSweepRoutes:
    def test_launch_and_query(self, client):
        config = {
            "name": "api",
            "m": 6,
            "k": 1,
            "snapshots": 1,
            "sweep": "snr_db",
            "values": ["noiseless", 10],
            "trials": 2,
            "population_size": 6,
            "max_generations": 2,
            "workers": 1,
        }
        response = client.post("/sweeps/", json=config)
        assert response.status_code == 202
        assert response.json()["status"] == "pending"
        sweep_id = response.json()["id"]

        detail = wait_for_sweep(client, sweep_id)
        assert detail["status"] == "finished"
        assert [row["sweep_value"] for row in detail["summary"]] == ["noiseless", "10.0"]

        trials = client.get(f"/sweeps/{sweep_id}/trials", params={"limit": 3}).json()
        assert trials["total"] == 4
        assert len(trials["trials"]) == 3
        assert trials["trials"][0]["sweep_index"] == 0

        listing = client.get("/sweeps/").json()
        assert any(s["id"] == sweep_id for s in listing["sweeps"])

        finished = client.get("/sweeps/", params={"status": "finished"}).json()
        assert any(s["id"] == sweep_id for s in finished["sweeps"])
        assert all(s["status"] == "finished" for s in finished["sweeps"])
        failed = client.get("/sweeps/", params={"status": "failed"}).json()
        assert all(s["id"] != sweep_id for s in failed["sweeps"])

    def test_finished_sweep_leaves_the_job_table(self, client):
        config = {
            "m": 6, "k": 1, "snapshots": 1, "values": [10], "trials": 1,
            "population_size": 6, "max_generations": 2, "workers": 1,
        }
        sweep_id = client.post("/sweeps/", json=config).json()["id"]
        assert wait_for_sweep(client, sweep_id)["status"] == "finished"

        deadline = time.time() + 5.0
        while sweep_id in sweep_job_manager.tasks and time.time() < deadline:
            time.sleep(0.05)
        assert sweep_id not in sweep_job_manager.tasks
        assert client.get("/health").json()["active_sweeps"] == 0

    def test_unknown_status_filter_rejected(self, client):
        assert client.get("/sweeps/", params={"status": "paused"}).status_code == 422

    def test_invalid_sweep_rejected(self, client):
        response = client.post("/sweeps/", json={"sweep": "K", "values": []})
        assert response.status_code == 422

    def test_unknown_sweep(self, client):
        assert client.get("/sweeps/999999").status_code == 404
        assert client.get("/sweeps/999999/trials").status_code == 404
