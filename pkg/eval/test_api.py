import pytest
from fastapi.testclient import TestClient

import auth
import main
from errors import ConfigError, NumericalError


@pytest.fixture
def client():
    return TestClient(main.app)


@pytest.fixture
def headers():
    return {auth.API_KEY_NAME: auth.API_KEYS[0]}


def bell_document():
    return {
        "schema_version": "1.0.0",
        "chain": {"L": 8, "defects": {"1": 10.0, "2": 10.0}},
        "protocol": {"kind": "bell", "defect_sites": [1, 2], "shape": "none", "snapshots": 20},
    }


def test_hello_requires_a_key(client, headers):
    assert client.get("/").status_code == 401
    assert client.get("/", headers={auth.API_KEY_NAME: "wrong"}).status_code == 401
    response = client.get("/", headers=headers)
    assert response.status_code == 200
    assert response.json()["schema_version"] == "1.0.0"


def test_spectrum(client, headers):
    body = {"schema_version": "1.0.0", "chain": {"L": 4}, "N": 1}
    response = client.post("/spectrum", json=body, headers=headers)
    assert response.status_code == 200
    payload = response.json()
    assert payload["eigenvalues"] == pytest.approx([998.0, 999.0, 999.0, 1000.0])
    assert [row["band"] for row in payload["bands"]] == ["bulk"]
    assert payload["unassigned"] == [] and payload["ambiguous"] == []


def test_protocol(client, headers):
    response = client.post("/protocol", json=bell_document(), headers=headers)
    assert response.status_code == 200
    payload = response.json()
    assert payload["summary"]["branch"] == "-i"
    assert len(payload["timeseries"]) == 21
    assert set(payload["timeseries"][0]) == {"t", "P_site_1", "P_site_2", "fid_raw", "fid_phase", "concurrence", "Q"}


def test_sweep(client, headers):
    body = bell_document()
    body["sweep"] = {"parameter": "d", "values": [10.0, 20.0]}
    response = client.post("/sweep", json=body, headers=headers)
    assert response.status_code == 200
    assert [row["value"] for row in response.json()["rows"]] == [10.0, 20.0]


def test_invalid_documents_are_422(client, headers):
    assert client.post("/spectrum", json={"schema_version": "2.0.0", "chain": {"L": 4}, "N": 1},
                       headers=headers).status_code == 422
    response = client.post("/spectrum", json={"schema_version": "1.0.0", "chain": {"L": 1}, "N": 0}, headers=headers)
    assert response.status_code == 422
    assert "at least 2 sites" in response.json()["detail"]
    response = client.post("/protocol", json={"schema_version": "1.0.0", "chain": {"L": 4}, "N": 1}, headers=headers)
    assert response.status_code == 422
    assert "protocol" in response.json()["detail"]


def test_numerical_failure_is_500(client, headers, monkeypatch):
    def fail(config):
        raise NumericalError("no convergence", last_step=0.25)

    monkeypatch.setattr(main, "cmd_protocol", fail)
    response = client.post("/protocol", json=bell_document(), headers=headers)
    assert response.status_code == 500
    assert response.json() == {"detail": "no convergence", "last_step": 0.25}


def test_key_list_parsing():
    assert auth.load_api_keys(" a, b ,,c ") == ["a", "b", "c"]
    with pytest.raises(ConfigError):
        auth.load_api_keys(" , ")
