import itertools

import numpy as np
import pytest

from assm.errors import DataError
from assm.fixtures import (
    FemurParams,
    FixtureFamilySpec,
    ScapulaParams,
    default_femur_spec,
    default_scapula_spec,
    make_femur,
    make_fixture,
    make_scapula,
    sample_family,
)
from assm.morphometry import measure_femur, measure_scapula, transfer_landmarks
from assm.stats import pearson_matrix


class TestMakeFemur:
    def test_deterministic(self):
        a, _ = make_femur(FemurParams())
        b, _ = make_femur(FemurParams())
        np.testing.assert_array_equal(a.vertices, b.vertices)
        np.testing.assert_array_equal(a.faces, b.faces)

    def test_parameter_grid_recovery(self):
        for length, diameter, angle in itertools.product(
                (38.0, 43.0, 48.0), (45.0, 52.0, 58.0), (115.0, 125.0, 135.0)):
            params = FemurParams(length, diameter, angle, 14.0, 84.0)
            mesh, lm = make_femur(params)
            mv = measure_femur(transfer_landmarks(lm, mesh))
            truth = params.as_measurements()
            assert mv.values["NSA"] == pytest.approx(truth["NSA"], abs=0.5)
            assert mv.values["FV"] == pytest.approx(truth["FV"], abs=0.5)
            for c in ("BW", "HD", "FL"):
                assert mv.values[c] == pytest.approx(truth[c], abs=0.1)

    def test_topology_constant_across_parameters(self):
        a, lma = make_femur(FemurParams())
        b, lmb = make_femur(FemurParams(39.0, 47.0, 131.0, 20.0, 90.0))
        assert a.n_points == b.n_points
        np.testing.assert_array_equal(a.faces, b.faces)
        assert lma.entries == lmb.entries

    def test_scaled_lengths_keep_angles(self):
        p = FemurParams(43.0, 52.0, 125.0, 14.0, 84.0)
        scaled = FemurParams(86.0, 104.0, 125.0, 14.0, 168.0)
        m1, lm1 = make_femur(p)
        m2, lm2 = make_femur(scaled)
        v1 = measure_femur(transfer_landmarks(lm1, m1)).values
        v2 = measure_femur(transfer_landmarks(lm2, m2)).values
        assert v2["NSA"] == pytest.approx(v1["NSA"], abs=1e-6)
        assert v2["FV"] == pytest.approx(v1["FV"], abs=1e-6)

    def test_invalid_params(self):
        with pytest.raises(DataError):
            make_femur(FemurParams(length_cm=-1.0))
        with pytest.raises(DataError):
            make_femur(FemurParams(neck_shaft_angle_deg=179.0))


class TestMakeScapula:
    def test_deterministic(self):
        a, _ = make_scapula(ScapulaParams())
        b, _ = make_scapula(ScapulaParams())
        np.testing.assert_array_equal(a.vertices, b.vertices)

    def test_parameter_grid_recovery(self):
        for height, width, tilt in itertools.product(
                (33.0, 36.0, 40.0), (25.0, 28.0, 31.0), (4.0, 8.0, 12.0)):
            params = ScapulaParams(155.0, height, width, tilt, 5.0, 33.0)
            mesh, lm = make_scapula(params)
            mv = measure_scapula(transfer_landmarks(lm, mesh))
            truth = params.as_measurements()
            for c in ("CSA", "GI", "GV"):
                assert mv.values[c] == pytest.approx(truth[c], abs=0.5)
            for c in ("GH", "GW", "SL"):
                assert mv.values[c] == pytest.approx(truth[c], abs=0.1)

    def test_tilt_coupling_validation(self):
        with pytest.raises(DataError):
            make_scapula(ScapulaParams(version_deg=0.0, inclination_deg=5.0))
        with pytest.raises(DataError):
            make_scapula(ScapulaParams(version_deg=5.0, inclination_deg=0.0))
        make_scapula(ScapulaParams(version_deg=0.0, inclination_deg=0.0))

    def test_rim_shape_validation(self):
        with pytest.raises(DataError):
            make_scapula(ScapulaParams(rim_height_mm=10.0, rim_diameter_mm=28.0))


def test_make_fixture_dispatch():
    femur_mesh, _ = make_fixture(FemurParams())
    scap_mesh, _ = make_fixture(ScapulaParams())
    assert femur_mesh.topology_id != scap_mesh.topology_id
    with pytest.raises(DataError):
        make_fixture(object())


def test_fixture_vector_round_trip_bit_exact():
    from assm.shapes import devectorize, vectorize

    mesh, _ = make_femur(FemurParams())
    back = devectorize(vectorize(mesh), mesh.faces, mesh.topology_id)
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    np.testing.assert_array_equal(back.faces, mesh.faces)


def test_fixture_obj_round_trip_keeps_landmark_vertices(tmp_path):
    # landmark vertices are not referenced by faces but must survive I/O
    from assm.obj_io import read_obj, write_obj

    mesh, lm = make_scapula(ScapulaParams())
    write_obj(mesh, tmp_path / "s.obj")
    back = read_obj(tmp_path / "s.obj", topology_id=mesh.topology_id)
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    assert max(lm.entries.values()) < back.n_points


class TestSampleFamily:
    def test_zero_covariance_like(self):
        spec = default_femur_spec(n_samples=4, seed=0)
        tiny = FixtureFamilySpec("femur", spec.mean, np.eye(5) * 1e-12, 4, seed=0)
        family = sample_family(tiny)
        v0 = family.dataset.meshes[0].vertices
        for mesh in family.dataset.meshes[1:]:
            np.testing.assert_allclose(mesh.vertices, v0, atol=1e-4)

    def test_seed_determinism(self):
        a = sample_family(default_femur_spec(n_samples=5, seed=3))
        b = sample_family(default_femur_spec(n_samples=5, seed=3))
        for ma, mb in zip(a.dataset.meshes, b.dataset.meshes):
            np.testing.assert_array_equal(ma.vertices, mb.vertices)

    def test_generator_correlation_recovered(self):
        spec = default_femur_spec(n_samples=400, seed=4)
        corr = np.eye(5)
        corr[0, 4] = corr[4, 0] = 0.8  # length vs condylar width
        sigmas = np.array([2.0, 3.0, 4.0, 5.0, 5.0])
        spec = FixtureFamilySpec("femur", spec.mean, corr * np.outer(sigmas, sigmas),
                                 400, seed=4)
        family = sample_family(spec)
        measured = np.array([
            [measure_femur(transfer_landmarks(family.landmarks, mesh)).values[c]
             for c in ("FL", "BW")]
            for mesh in family.dataset.meshes
        ])
        rho = pearson_matrix(measured)[0, 1]
        assert rho == pytest.approx(0.8, abs=0.05)

    def test_ground_truth_table(self):
        family = sample_family(default_scapula_spec(n_samples=3, seed=5))
        truth = family.ground_truth()
        assert len(truth) == 3
        for row, mesh in zip(truth, family.dataset.meshes):
            mv = measure_scapula(transfer_landmarks(family.landmarks, mesh))
            for c, expected in row.items():
                assert mv.values[c] == pytest.approx(expected, abs=0.5)

    def test_invalid_covariance(self):
        spec = default_femur_spec()
        bad = np.zeros((5, 5))
        with pytest.raises(DataError):
            FixtureFamilySpec("femur", spec.mean, bad, 3, 0)
