"""HTTP service surface: endpoints, schemas, error mapping."""

import base64

import pytest

from evmscan.service import create_app


@pytest.fixture(scope="module")
def client():
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    with TestClient(create_app()) as c:
        yield c


@pytest.fixture(scope="module")
def trained(client):
    synth = client.post("/synth", json={"n": 24, "seed": 13}).json()
    resp = client.post(
        "/train",
        json={
            "contracts": synth["contracts"],
            "features": "full",
            "encoder": {"d_model": 16, "n_layers": 1, "n_heads": 2, "max_len": 128, "seed": 0},
            "gbdt": {"n_trees": 20, "max_leaves": 8, "seed": 0},
        },
    )
    assert resp.status_code == 200, resp.text
    return synth["contracts"], resp.json()


class TestBasics:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"

    def test_vocab(self, client):
        body = client.get("/vocab").json()
        assert len(body["symbols"]) == 80
        assert len(body["sha256"]) == 64

    def test_model_info_empty(self, client):
        assert client.get("/model").json()["loaded"] is False


class TestSynth:
    def test_synth_shape(self, client):
        body = client.post("/synth", json={"n": 8, "seed": 1}).json()
        assert len(body["contracts"]) == 8
        labels = {cls for c in body["contracts"] for cls in c["labels"]}
        assert labels == {"RV", "AV", "SD", "TDV"}

    def test_synth_validates_n(self, client):
        assert client.post("/synth", json={"n": 4, "seed": 1}).status_code == 422


class TestTrainScanEval:
    def test_train_response(self, trained):
        _, result = trained
        assert result["feature_dim"] == 80 + 4 * 16
        assert result["n_contracts"] == 24
        assert set(result["positives_per_class"]) == {"RV", "AV", "SD", "TDV"}

    def test_scan_with_inline_bundle(self, client, trained):
        contracts, result = trained
        resp = client.post(
            "/scan",
            json={
                "bytecode_hex": "0x33ff",
                "source_id": "fixture",
                "bundle_b64": result["bundle_b64"],
                "include_dot": True,
            },
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["verdicts"]["SD"] is True
        assert body["fragments"]["SD"][0]["seed_pc"] == 0
        assert body["dot"].startswith("digraph")

    def test_scan_without_model_400(self, client):
        resp = client.post("/scan", json={"bytecode_hex": "0x00"})
        assert resp.status_code == 400

    def test_scan_bad_hex_400(self, client, trained):
        _, result = trained
        resp = client.post(
            "/scan", json={"bytecode_hex": "0xzz", "bundle_b64": result["bundle_b64"]}
        )
        assert resp.status_code == 400
        assert "MalformedHex" in resp.json()["detail"]

    def test_model_load_then_scan(self, client, trained):
        _, result = trained
        resp = client.post("/model", json={"bundle_b64": result["bundle_b64"]})
        assert resp.status_code == 200
        assert resp.json()["loaded"] is True
        resp = client.post("/scan", json={"bytecode_hex": "0x33ff"})
        assert resp.status_code == 200
        assert resp.json()["verdicts"]["SD"] is True

    def test_eval(self, client, trained):
        contracts, result = trained
        resp = client.post("/eval", json={"contracts": contracts, "bundle_b64": result["bundle_b64"]})
        assert resp.status_code == 200
        body = resp.json()
        assert set(body["per_class"]) == {"RV", "AV", "SD", "TDV"}
        assert 0.0 <= body["macro_f1"] <= 1.0
        assert body["n_contracts"] == 24
        assert sum(b["count"] for b in body["time_buckets"]) == 24

    def test_eval_with_workers(self, client, trained):
        contracts, result = trained
        resp = client.post(
            "/eval",
            json={"contracts": contracts, "bundle_b64": result["bundle_b64"], "workers": 2},
        )
        assert resp.status_code == 200
        baseline = client.post(
            "/eval", json={"contracts": contracts, "bundle_b64": result["bundle_b64"]}
        ).json()
        body = resp.json()
        assert body["per_class"] == baseline["per_class"]

    def test_train_single_class_labels_400(self, client, trained):
        contracts, _ = trained
        stripped = [dict(c, labels=[]) for c in contracts]
        resp = client.post("/train", json={"contracts": stripped, "gbdt": {"n_trees": 2}})
        assert resp.status_code == 400
        assert "DegenerateLabels" in resp.json()["detail"]

    def test_train_rejects_unknown_class(self, client, trained):
        contracts, _ = trained
        bad = [dict(contracts[0], labels=["XX"])] + contracts[1:]
        resp = client.post("/train", json={"contracts": bad})
        assert resp.status_code == 400

    def test_bad_base64_400(self, client):
        resp = client.post("/scan", json={"bytecode_hex": "0x00", "bundle_b64": "!!!"})
        assert resp.status_code == 400


class TestFragmentsEndpoint:
    def test_dump(self, client):
        synth = client.post("/synth", json={"n": 8, "seed": 3}).json()
        resp = client.post("/fragments", json={"contracts": synth["contracts"]})
        assert resp.status_code == 200
        body = resp.json()
        assert body["n_records"] == len(body["lines"])
        assert body["n_records"] > 0
        first = body["lines"][0].split()
        assert first[1] in {"RV", "AV", "SD", "TDV"}
        assert first[2].isdigit()
