import numpy as np
import pytest

from assm.errors import DataError, DimensionError, InsufficientDataError
from assm.shapes import CorrespondedMesh, ShapeDataset, vectorize
from assm.ssm import (
    BaseSsm,
    build_base,
    load_model,
    project,
    reconstruct,
    sample,
    save_model,
)

FACES = np.array([[0, 1, 2]])


def dataset_from_matrix(x):
    meshes = [CorrespondedMesh(row.reshape(-1, 3), FACES, "t") for row in x]
    return ShapeDataset(meshes)


def random_dataset(rng, n=10, n_points=8):
    x = rng.standard_normal((n, 3 * n_points)) * 5.0
    return dataset_from_matrix(x)


class TestBuildBase:
    def test_identical_shapes_rank_zero(self):
        row = np.arange(12.0)
        ds = dataset_from_matrix(np.tile(row, (5, 1)))
        model = build_base(ds)
        assert model.rank == 0
        np.testing.assert_allclose(model.mean, row)

    def test_two_shape_eigenpair(self):
        rng = np.random.default_rng(0)
        s1 = rng.standard_normal(12)
        s2 = rng.standard_normal(12)
        model = build_base(dataset_from_matrix(np.stack([s1, s2])))
        assert model.rank == 1
        expected_lambda = np.sum((s1 - s2) ** 2) / 2.0
        np.testing.assert_allclose(model.eigenvalues[0], expected_lambda, rtol=1e-12)
        direction = (s1 - s2) / np.linalg.norm(s1 - s2)
        cos = abs(direction @ model.basis[:, 0])
        np.testing.assert_allclose(cos, 1.0, atol=1e-12)

    def test_total_variance_identity(self):
        rng = np.random.default_rng(1)
        ds = random_dataset(rng, n=10)
        model = build_base(ds)
        x = ds.as_matrix()
        total = np.sum((x - x.mean(axis=0)) ** 2) / (x.shape[0] - 1)
        np.testing.assert_allclose(model.eigenvalues.sum(), total, rtol=1e-8)

    def test_matches_dense_covariance_eigenvalues(self):
        # snapshot route vs direct dense eigendecomposition (small N)
        rng = np.random.default_rng(2)
        x = rng.standard_normal((6, 9)) * 3.0
        model = build_base(dataset_from_matrix(x))
        xc = x - x.mean(axis=0)
        cov = xc.T @ xc / (x.shape[0] - 1)
        dense = np.sort(np.linalg.eigvalsh(cov))[::-1][: model.rank]
        np.testing.assert_allclose(model.eigenvalues, dense, rtol=1e-8)

    def test_basis_orthonormal(self):
        rng = np.random.default_rng(3)
        model = build_base(random_dataset(rng, n=12))
        gram = model.basis.T @ model.basis
        assert np.abs(gram - np.eye(model.rank)).max() < 1e-8

    def test_sign_convention(self):
        rng = np.random.default_rng(4)
        model = build_base(random_dataset(rng))
        for j in range(model.rank):
            col = model.basis[:, j]
            assert col[np.argmax(np.abs(col))] > 0

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            ShapeDataset([])

    def test_rank_capped_at_n_minus_1(self):
        rng = np.random.default_rng(5)
        model = build_base(random_dataset(rng, n=4))
        assert model.rank <= 3


class TestSampleProject:
    def test_zero_alpha_gives_mean(self):
        rng = np.random.default_rng(6)
        model = build_base(random_dataset(rng))
        np.testing.assert_array_equal(sample(model, np.zeros(model.rank)), model.mean)

    def test_single_mode(self):
        rng = np.random.default_rng(7)
        model = build_base(random_dataset(rng))
        e1 = np.zeros(model.rank)
        e1[0] = 1.0
        expected = model.mean + np.sqrt(model.eigenvalues[0]) * model.basis[:, 0]
        np.testing.assert_allclose(sample(model, e1), expected, rtol=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(8)
        model = build_base(random_dataset(rng))
        alpha = rng.standard_normal(model.rank)
        np.testing.assert_allclose(project(model, sample(model, alpha)), alpha, atol=1e-8)

    def test_project_mean_is_zero(self):
        rng = np.random.default_rng(9)
        model = build_base(random_dataset(rng))
        np.testing.assert_allclose(project(model, model.mean), 0.0, atol=1e-10)

    def test_training_shape_reconstruction(self):
        rng = np.random.default_rng(10)
        ds = random_dataset(rng, n=6)
        model = build_base(ds)
        for mesh in ds.meshes:
            s = vectorize(mesh)
            err = np.linalg.norm(reconstruct(model, s) - s)
            assert err <= 1e-6

    def test_projection_is_optimal(self):
        rng = np.random.default_rng(11)
        ds = random_dataset(rng, n=5)
        model = build_base(ds)
        outside = vectorize(ds.meshes[0]) + rng.standard_normal(model.mean.size) * 2.0
        alpha = project(model, outside)
        best = np.linalg.norm(sample(model, alpha) - outside)
        for _ in range(100):
            perturbed = alpha + rng.standard_normal(model.rank) * 0.1
            assert np.linalg.norm(sample(model, perturbed) - outside) >= best - 1e-9

    def test_dimension_errors(self):
        rng = np.random.default_rng(12)
        model = build_base(random_dataset(rng))
        with pytest.raises(DimensionError):
            sample(model, np.zeros(model.rank + 1))
        with pytest.raises(DimensionError):
            project(model, np.zeros(model.mean.size + 3))

    def test_rank_zero_project_errors(self):
        ds = dataset_from_matrix(np.tile(np.arange(12.0), (3, 1)))
        model = build_base(ds)
        with pytest.raises(DataError):
            project(model, model.mean)

    def test_sampling_distribution(self):
        rng = np.random.default_rng(13)
        model = build_base(random_dataset(rng, n=8))
        draws = rng.standard_normal((10_000, model.rank))
        shapes = model.mean[:, None] + (model.basis * np.sqrt(model.eigenvalues)) @ draws.T
        proj = model.basis.T @ (shapes - model.mean[:, None])
        var = proj.var(axis=1, ddof=1)
        np.testing.assert_allclose(var, model.eigenvalues, rtol=0.05)


class TestSerialization:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(14)
        model = build_base(random_dataset(rng))
        path = tmp_path / "model.json"
        save_model(model, path, seed=42)
        back = load_model(path)
        np.testing.assert_array_equal(back.mean, model.mean)
        np.testing.assert_array_equal(back.eigenvalues, model.eigenvalues)
        np.testing.assert_array_equal(back.basis, model.basis)
        np.testing.assert_array_equal(back.faces, model.faces)
        assert back.topology_id == model.topology_id
        assert back.n_training == model.n_training

    def test_serialization_deterministic(self, tmp_path):
        rng = np.random.default_rng(15)
        model = build_base(random_dataset(rng))
        save_model(model, tmp_path / "a.json")
        save_model(model, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_descending_eigenvalues_enforced(self):
        with pytest.raises(DataError):
            BaseSsm(np.zeros(6), np.array([1.0, 2.0]), np.zeros((6, 2)), FACES, "t")
