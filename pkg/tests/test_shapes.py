import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from assm.errors import (
    DataError,
    DegenerateGeometryError,
    DimensionError,
    InsufficientDataError,
    TopologyError,
)
from assm.shapes import (
    CorrespondedMesh,
    ShapeDataset,
    devectorize,
    procrustes_objective,
    rigid_align,
    vectorize,
)
from conftest import random_rotation

TRI = np.array([[0, 1, 2]])


def mesh_from(verts, topology_id="t"):
    verts = np.asarray(verts, dtype=float)
    faces = TRI if verts.shape[0] >= 3 else np.zeros((0, 3), dtype=int)
    return CorrespondedMesh(verts, faces, topology_id)


def random_mesh(rng, n=12, topology_id="t"):
    return mesh_from(rng.standard_normal((n, 3)) * 10.0, topology_id)


class TestVectorize:
    def test_single_vertex(self):
        m = mesh_from([[1.0, 2.0, 3.0]])
        assert vectorize(m).tolist() == [1.0, 2.0, 3.0]

    def test_two_vertices_order(self):
        m = mesh_from([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        assert vectorize(m).tolist() == [0.0, 0.0, 0.0, 1.0, 0.0, 0.0]

    def test_round_trip_identity(self):
        rng = np.random.default_rng(0)
        m = random_mesh(rng)
        back = devectorize(vectorize(m), m.faces, m.topology_id)
        np.testing.assert_array_equal(back.vertices, m.vertices)
        np.testing.assert_array_equal(back.faces, m.faces)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(
        st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)),
        min_size=1, max_size=40))
    def test_round_trip_property(self, coords):
        m = mesh_from(coords)
        back = devectorize(vectorize(m), m.faces, m.topology_id)
        np.testing.assert_array_equal(back.vertices, m.vertices)


class TestDevectorize:
    def test_single_point(self):
        m = devectorize(np.array([1.0, 2.0, 3.0]), np.zeros((0, 3), dtype=int), "t")
        np.testing.assert_array_equal(m.vertices, [[1.0, 2.0, 3.0]])

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            devectorize(np.arange(4.0), np.zeros((0, 3), dtype=int), "t")

    def test_topology_out_of_range(self):
        with pytest.raises(DimensionError):
            devectorize(np.arange(3.0), TRI, "t")


class TestMeshValidation:
    def test_face_index_out_of_range(self):
        with pytest.raises(DataError):
            CorrespondedMesh(np.zeros((2, 3)), TRI, "t")

    def test_non_finite(self):
        with pytest.raises(DataError):
            mesh_from([[np.nan, 0, 0], [0, 0, 0], [0, 0, 1]])

    def test_dataset_needs_two(self):
        with pytest.raises(InsufficientDataError):
            ShapeDataset([random_mesh(np.random.default_rng(0))])

    def test_dataset_topology_mismatch(self):
        rng = np.random.default_rng(0)
        with pytest.raises(TopologyError):
            ShapeDataset([random_mesh(rng, topology_id="a"),
                          random_mesh(rng, topology_id="b")])

    def test_dataset_size_mismatch(self):
        rng = np.random.default_rng(0)
        with pytest.raises(TopologyError):
            ShapeDataset([random_mesh(rng, n=12), random_mesh(rng, n=13)])


class TestRigidAlign:
    def test_translation_removed(self):
        rng = np.random.default_rng(1)
        m = random_mesh(rng)
        shifted = m.translated([10.0, 0.0, 0.0])
        aligned = rigid_align(ShapeDataset([m, shifted, m.translated([0, 2, 0])]))
        pts = np.stack([x.vertices for x in aligned.meshes])
        assert np.abs(pts[0] - pts[1]).max() < 1e-9
        assert np.abs(pts[0] - pts[2]).max() < 1e-9

    def test_rotation_removed(self):
        rng = np.random.default_rng(2)
        m = random_mesh(rng)
        rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])  # 90 deg about z
        rotated = m.transformed(rot, np.zeros(3))
        aligned = rigid_align(ShapeDataset([m, rotated]))
        pts = np.stack([x.vertices for x in aligned.meshes])
        assert np.abs(pts[0] - pts[1]).max() < 1e-9

    def test_objective_not_increased(self):
        rng = np.random.default_rng(3)
        meshes = [random_mesh(rng) for _ in range(3)]
        before = procrustes_objective(np.stack([m.vertices for m in meshes]))
        aligned = rigid_align(ShapeDataset(meshes))
        after = procrustes_objective(np.stack([m.vertices for m in aligned.meshes]))
        assert after <= before + 1e-12

    def test_idempotent(self):
        rng = np.random.default_rng(4)
        meshes = [random_mesh(rng) for _ in range(4)]
        once = rigid_align(ShapeDataset(meshes), tol=1e-12)
        twice = rigid_align(once, tol=1e-12)
        obj_once = procrustes_objective(np.stack([m.vertices for m in once.meshes]))
        obj_twice = procrustes_objective(np.stack([m.vertices for m in twice.meshes]))
        assert abs(obj_once - obj_twice) < 1e-9 * max(obj_once, 1.0)

    def test_intra_shape_distances_preserved(self):
        rng = np.random.default_rng(5)
        meshes = [random_mesh(rng) for _ in range(3)]
        aligned = rigid_align(ShapeDataset(meshes))
        for orig, new in zip(meshes, aligned.meshes):
            d0 = np.linalg.norm(orig.vertices[:, None] - orig.vertices[None], axis=-1)
            d1 = np.linalg.norm(new.vertices[:, None] - new.vertices[None], axis=-1)
            assert np.abs(d0 - d1).max() < 1e-9 * max(d0.max(), 1.0)

    def test_random_rigid_motions_recovered(self):
        rng = np.random.default_rng(6)
        m = random_mesh(rng, n=20)
        meshes = [m.transformed(random_rotation(rng), rng.uniform(-50, 50, 3))
                  for _ in range(5)]
        aligned = rigid_align(ShapeDataset(meshes), tol=1e-14)
        pts = np.stack([x.vertices for x in aligned.meshes])
        assert np.abs(pts - pts[0]).max() < 1e-6

    def test_degenerate_shape(self):
        degenerate = mesh_from(np.ones((4, 3)))
        other = random_mesh(np.random.default_rng(7), n=4)
        with pytest.raises(DegenerateGeometryError):
            rigid_align(ShapeDataset([degenerate, other]))
