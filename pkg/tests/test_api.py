"""Tests de l'API HTTP."""
import pytest
from fastapi.testclient import TestClient

from app.main import app
from app.models import Scheme
from app.services.config_manager import config_manager


@pytest.fixture
def client() -> TestClient:
    return TestClient(app)


class TestHealth:

    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json()["status"] == "ok"


class TestConfig:

    def test_defaults(self, client):
        body = client.get("/api/config/defaults").json()
        assert "nesting_n = 3" in body["text"]
        assert body["params"]["repeater"]["nesting_n"] == 3

    def test_parse_sets_current_params(self, client):
        response = client.post("/api/config/parse", json={"text": "nesting_n = 2\n"})
        assert response.status_code == 200
        assert config_manager.params.repeater.nesting_n == 2

    def test_parse_error_reports_line(self, client):
        response = client.post("/api/config/parse", json={"text": "\nfoo = 1\n"})
        assert response.status_code == 400
        detail = response.json()["detail"]
        assert detail["line"] == 2
        assert detail["field"] == "foo"


class TestPhysics:

    def test_dipole(self, client):
        body = client.get("/api/dipole", params={"separation_nm": 1}).json()
        assert body["stark_shift_hz"] == pytest.approx(10.03e6, rel=5e-3)
        assert body["drive"]["t_cnot"] < 1e-6

    def test_dipole_rejects_negative_distance(self, client):
        assert client.get("/api/dipole", params={"separation_nm": -1}).status_code == 422

    def test_cavity(self, client):
        body = client.get("/api/cavity", params={"purcell_p": 100}).json()
        assert body["p"] == pytest.approx(0.9507, abs=1e-4)
        assert body["photon"]["bandwidth"] == pytest.approx(1400.0)

    def test_cavity_invalid_t2(self, client):
        assert client.get("/api/cavity", params={"t2_opt": 1.0}).status_code == 400

    def test_fidelity(self, client):
        body = client.get("/api/fidelity").json()
        assert body["f_cnot"] == pytest.approx(0.9861, abs=2e-4)


class TestRates:

    def test_sweep_csv(self, client):
        response = client.post("/api/rates/sweep", json={"start": 100, "stop": 200, "step": 100})
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/csv")
        assert len(response.text.splitlines()) == 1 + 2 * len(Scheme)

    def test_sweep_json(self, client):
        response = client.post(
            "/api/rates/sweep",
            json={"distances": [600], "schemes": ["repeater"], "format": "json"},
        )
        rows = response.json()
        assert len(rows) == 1
        assert rows[0]["rate_hz"] == pytest.approx(1.4387, rel=1e-3)

    def test_sweep_json_infinite_time(self, client):
        client.post("/api/config/parse", json={"text": "p_emit = 0\n"})
        rows = client.post("/api/rates/sweep", json={"distances": [600], "schemes": ["repeater"], "format": "json"}).json()
        assert rows[0]["expected_time_s"] is None

    def test_sweep_rejects_bad_distances(self, client):
        response = client.post("/api/rates/sweep", json={"distances": [-1]})
        assert response.status_code == 400


class TestMonteCarlo:

    def test_run(self, client):
        response = client.post("/api/montecarlo", json={"trials": 500, "seed": 1, "nesting_n": 1, "total_length_l": 200})
        assert response.status_code == 200
        body = response.json()
        assert body["trials"] == 500
        assert body["mean_time"] == pytest.approx(body["analytic_time"], rel=0.15)

    def test_too_few_trials(self, client):
        assert client.post("/api/montecarlo", json={"trials": 10}).status_code == 422

    def test_impossible_configuration(self, client):
        client.post("/api/config/parse", json={"text": "p_emit = 0\n"})
        assert client.post("/api/montecarlo", json={"trials": 100}).status_code == 400
