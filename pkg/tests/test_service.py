import numpy as np
import pytest
from fastapi.testclient import TestClient

from assm.mapping import sweep
from assm.service import create_app


@pytest.fixture(scope="module")
def client(femur_models, scapula_models):
    f_anat, f_oc = femur_models
    s_anat, s_oc = scapula_models
    app = create_app({
        "femur-anat": f_anat, "femur-oc": f_oc,
        "scapula-anat": s_anat, "scapula-oc": s_oc,
    })
    return TestClient(app)


class TestModelsEndpoint:
    def test_lists_loaded_models(self, client):
        r = client.get("/models")
        assert r.status_code == 200
        body = r.json()
        assert [m["id"] for m in body] == sorted(
            ["femur-anat", "femur-oc", "scapula-anat", "scapula-oc"])
        descriptor = body[0]
        assert set(descriptor) == {"id", "kind", "labels", "stats", "variability"}
        assert descriptor["kind"] in ("anat", "oc-anat")
        for label in descriptor["labels"]:
            cell = descriptor["stats"][label]
            assert cell["std"] > 0
            assert cell["unit"]

    def test_variability_ordering(self, client):
        body = client.get("/models").json()
        femur = next(m for m in body if m["id"] == "femur-anat")
        fractions = femur["variability"]["fractions"]
        order = femur["variability"]["order"]
        values = [fractions[c] for c in order]
        assert values == sorted(values, reverse=True)


class TestGenerateEndpoint:
    def test_empty_params_gives_mean(self, client, femur_models):
        anat, _ = femur_models
        r = client.post("/models/femur-anat/generate", json={"params": {}})
        assert r.status_code == 200
        body = r.json()
        assert all(v == 0.0 for v in body["beta_std"].values())
        verts = np.array(body["mesh"]["vertices"])
        np.testing.assert_allclose(verts, anat.base.mean, atol=1e-9)

    def test_deterministic(self, client):
        payload = {"params": {"HD": 54.0}}
        a = client.post("/models/femur-anat/generate", json=payload)
        b = client.post("/models/femur-anat/generate", json=payload)
        assert a.text == b.text

    def test_oc_pins_only_requested(self, client, femur_models):
        _, oc = femur_models
        j = list(oc.labels).index("HD")
        target = float(oc.stats.mean[j] + 1.5 * oc.stats.std[j])
        r = client.post("/models/femur-oc/generate", json={"params": {"HD": target}})
        body = r.json()
        assert body["beta_std"]["HD"] == pytest.approx(1.5, abs=1e-9)
        for label, v in body["beta_std"].items():
            if label != "HD":
                assert v == pytest.approx(0.0, abs=1e-12)
        assert body["measurements"]["HD"]["value"] == pytest.approx(target, abs=1e-6)

    def test_anat_correlated_drift(self, client, femur_models):
        anat, _ = femur_models
        j = list(anat.labels).index("FL")
        target = float(anat.stats.mean[j] + 2.0 * anat.stats.std[j])
        body = client.post("/models/femur-anat/generate",
                           json={"params": {"FL": target}}).json()
        cov = anat.param_covariance
        for k, label in enumerate(anat.labels):
            expected = cov[k, j] * 2.0 / cov[j, j]
            assert body["beta_std"][label] == pytest.approx(expected, abs=1e-9)

    def test_recipe_measurements_present_for_fixture_topology(self, client):
        body = client.post("/models/femur-anat/generate", json={"params": {}}).json()
        assert body["recipe_measurements"] is not None
        assert set(body["recipe_measurements"]) == {"NSA", "FV", "BW", "HD", "FL"}

    def test_unknown_model(self, client):
        assert client.post("/models/nope/generate",
                           json={"params": {}}).status_code == 404

    def test_unknown_label(self, client):
        r = client.post("/models/femur-anat/generate", json={"params": {"GW": 1.0}})
        assert r.status_code == 422

    def test_out_of_range_clamped(self, client, femur_models):
        anat, _ = femur_models
        j = list(anat.labels).index("HD")
        target = float(anat.stats.mean[j] + 10.0 * anat.stats.std[j])
        r = client.post("/models/femur-anat/generate",
                        json={"params": {"HD": target}})
        assert r.status_code == 422


class TestSweepEndpoint:
    def test_matches_library_sweep(self, client, femur_models):
        _, oc = femur_models
        r = client.get("/models/femur-oc/sweep", params={"param": "FL", "steps": 13})
        assert r.status_code == 200
        body = r.json()
        result = sweep(oc, "FL", steps=13)
        np.testing.assert_allclose(body["t_values"], result.t_values)
        np.testing.assert_allclose(np.array(body["readout_std"]),
                                   result.readout_std, atol=1e-12)
        for j, label in enumerate(result.labels):
            assert body["slopes"][label] == pytest.approx(result.slopes[j], abs=1e-12)

    def test_unknown_param(self, client):
        r = client.get("/models/femur-oc/sweep", params={"param": "NOPE"})
        assert r.status_code == 422

    def test_unknown_model(self, client):
        assert client.get("/models/zzz/sweep", params={"param": "FL"}).status_code == 404
