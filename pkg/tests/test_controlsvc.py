"""Control-service API contract, exercised in-process with a TestClient and an
untrained (but valid) checkpoint."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from awm.controlsvc import create_app
from awm.worldmodel import init_model, save_model


@pytest.fixture(scope="module")
def ckpt(tmp_path_factory):
    path = tmp_path_factory.mktemp("svc") / "model.awm1"
    save_model(init_model(0), path)
    return str(path)


@pytest.fixture()
def client(ckpt):
    app = create_app(default_ckpt=ckpt)
    with TestClient(app) as c:
        yield c


@pytest.fixture()
def debug_client(ckpt):
    app = create_app(default_ckpt=ckpt, debug_expose_disturbance=True)
    with TestClient(app) as c:
        yield c


def start(client, seed=0):
    r = client.post("/sessions", json={"seed": seed})
    assert r.status_code == 200
    return r.json()["session_id"]


def test_healthz(client):
    assert client.get("/healthz").json() == {"status": "ok"}


def test_session_lifecycle_and_state(client):
    sid = start(client)
    state = client.get(f"/sessions/{sid}/state").json()
    assert state["nominal_params"] == [0.5, 0.5, 0.5]
    assert len(state["reference_curve"]) == 500
    assert state["cycle_counter"] == 0
    assert "disturbance" not in state  # hidden unless debug-gated


def test_unknown_session_404(client):
    assert client.get("/sessions/nope/state").status_code == 404
    assert client.post("/sessions/nope/cycle").status_code == 404


def test_missing_checkpoint_rejected(client):
    r = client.post("/sessions", json={"ckpt": "/does/not/exist.awm1"})
    assert r.status_code == 400


def test_no_default_checkpoint_is_400():
    with TestClient(create_app()) as c:
        assert c.post("/sessions", json={}).status_code == 400


def test_cycle_payload_shape(client):
    sid = start(client)
    r = client.post(f"/sessions/{sid}/cycle")
    assert r.status_code == 200
    body = r.json()
    assert body["cycle_id"] == 0
    assert len(body["observed_curve"]) == 500
    assert len(body["suggested_action"]) == 3
    assert len(body["latent_point_2d"]) == 2
    assert body["deviation_score"] >= 0.0
    assert client.post(f"/sessions/{sid}/cycle").json()["cycle_id"] == 1


def test_cycles_are_seed_deterministic(client):
    a, b = start(client, seed=11), start(client, seed=11)
    ca = client.post(f"/sessions/{a}/cycle").json()["observed_curve"]
    cb = client.post(f"/sessions/{b}/cycle").json()["observed_curve"]
    assert ca == cb
    c_other = start(client, seed=12)
    assert client.post(f"/sessions/{c_other}/cycle").json()["observed_curve"] != ca


def test_adjust_moves_and_clamps_nominal(client):
    sid = start(client)
    r = client.post(f"/sessions/{sid}/adjust", json={"delta": [0.2, -0.1, 0.9]})
    assert r.json()["nominal_params"] == pytest.approx([0.7, 0.4, 1.0])
    r = client.post(f"/sessions/{sid}/adjust", json={"delta": [-2.0, 0.0, 0.0]})
    assert r.json()["nominal_params"][0] == 0.0


def test_adjust_validates_delta_length(client):
    sid = start(client)
    assert client.post(f"/sessions/{sid}/adjust", json={"delta": [0.1, 0.2]}).status_code == 422


def test_disturbance_changes_observed_curve(client):
    sid = start(client)
    base = np.array(client.post(f"/sessions/{sid}/cycle").json()["observed_curve"])
    client.post(f"/sessions/{sid}/disturb", json={"offset": [0.4, 0.0, 0.0]})
    shifted = np.array(client.post(f"/sessions/{sid}/cycle").json()["observed_curve"])
    assert np.max(np.abs(shifted - base)) > 0.05


def test_disturbance_hidden_without_debug(client):
    sid = start(client)
    r = client.post(f"/sessions/{sid}/disturb", json={"offset": [0.3, 0.0, 0.0]})
    assert r.status_code == 200 and r.json() == {}
    assert "disturbance" not in client.get(f"/sessions/{sid}/state").json()


def test_disturbance_visible_with_debug(debug_client):
    sid = start(debug_client)
    r = debug_client.post(f"/sessions/{sid}/disturb", json={"offset": [0.3, 0.0, 0.0]})
    assert r.json()["disturbance"] == [0.3, 0.0, 0.0]
    assert debug_client.get(f"/sessions/{sid}/state").json()["disturbance"] == [0.3, 0.0, 0.0]


def test_reset_clears_disturbance(debug_client):
    sid = start(debug_client)
    debug_client.post(f"/sessions/{sid}/disturb", json={"offset": [0.3, 0.0, 0.0]})
    debug_client.post(f"/sessions/{sid}/reset")
    assert debug_client.get(f"/sessions/{sid}/state").json()["disturbance"] == [0.0, 0.0, 0.0]


def test_higher_disturbance_raises_deviation_score(client):
    sid = start(client)
    base = client.post(f"/sessions/{sid}/cycle").json()["deviation_score"]
    client.post(f"/sessions/{sid}/disturb", json={"offset": [0.5, 0.0, 0.0]})
    disturbed = client.post(f"/sessions/{sid}/cycle").json()["deviation_score"]
    assert disturbed > base
