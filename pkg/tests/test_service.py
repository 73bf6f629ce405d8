import pytest
from fastapi.testclient import TestClient

from rnmh.records import history_from_csv
from rnmh.service.app import app

client = TestClient(app)
SMALL = {"rstar_min": -60, "rstar_max": 60, "n_points": 256, "width": 3.0}


def test_health():
    r = client.get("/health")
    assert r.status_code == 200 and r.json()["status"] == "ok"


def test_validate():
    ok = client.post("/config/validate", json={"config_text": "mass = 2\ncharge = 1\n"}).json()
    assert ok["valid"] and ok["config"]["mass"] == 2.0 and "mass = 2.0" in ok["serialized"]
    bad = client.post("/config/validate", json={"config_text": "mass = 1\ncharge = 1\n"}).json()
    assert not bad["valid"] and bad["error"]["key"] == "charge" and bad["error"]["line"] == 2


def test_run_mode_endpoint():
    r = client.post("/runs/mode", json={"overrides": {**SMALL, "t_final": 5}})
    assert r.status_code == 200
    body = r.json()
    assert body["n_reports"] == 6
    assert len(history_from_csv(body["csv"]).reports) == 6


def test_config_error_status():
    r = client.post("/runs/mode", json={"overrides": {"charge": 2}})
    assert r.status_code == 400
    assert r.json()["kind"] == "config" and r.json()["key"] == "charge"
    r = client.post("/runs/mode", json={"threads": 0})
    assert r.status_code == 422


def test_run_coupled_and_audit():
    over = {"rstar_min": -60, "rstar_max": 60, "n_points": 128, "n_theta": 12, "t_final": 4,
            "scalar_amplitude": 0.01, "q_A": 0.1, "width": 3.0, "scalar_width": 3.0}
    run = client.post("/runs/coupled", json={"overrides": over}).json()
    assert run["kind"] == "coupled"
    audit = client.post("/audit", json={"history": run["history_json"]}).json()
    assert {r["id"] for r in audit["reports"]} >= {"linf_growth", "gronwall_envelope", "el_vs_ec"}


def test_coulomb_endpoint():
    over = {"rstar_min": -40, "rstar_max": 40, "n_points": 128, "n_theta": 12, "t_final": 3, "q_F": 0.5}
    body = client.post("/coulomb-check", json={"overrides": over}).json()
    assert body["passed"] and body["q_F"] == 0.5


def test_converge_rejects_bad_resolutions():
    r = client.post("/converge", json={"resolutions": [512, 512, 512]})
    assert r.status_code == 400
