"""Corresponded-mesh data model and rigid group alignment.

A dataset is a list of meshes sharing one topology: identical vertex count,
identical face list, and vertex order acting as the point-to-point
correspondence (vertex k is the same anatomical location on every mesh).
Shapes move between mesh form and flattened coordinate vectors of length 3N
via :func:`vectorize` / :func:`devectorize`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataError,
    DegenerateGeometryError,
    DimensionError,
    InsufficientDataError,
    TopologyError,
)


@dataclass(frozen=True)
class CorrespondedMesh:
    """Fixed-topology triangle mesh whose vertex order is the correspondence.

    vertices: (N, 3) float array, millimeters.
    faces: (F, 3) int array of 0-based vertex indices.
    topology_id: shared by every mesh of one dataset.
    """

    vertices: np.ndarray
    faces: np.ndarray
    topology_id: str

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        f = np.asarray(self.faces, dtype=int)
        if v.ndim != 2 or v.shape[1] != 3:
            raise DimensionError(f"vertices must be (N, 3), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DataError("mesh contains non-finite vertex coordinates")
        if f.size and (f.ndim != 2 or f.shape[1] != 3):
            raise DimensionError(f"faces must be (F, 3), got {f.shape}")
        if f.size:
            if f.min() < 0 or f.max() >= v.shape[0]:
                raise DataError(
                    f"face index out of range: mesh has {v.shape[0]} vertices, "
                    f"faces reference up to {f.max()}"
                )
        else:
            f = f.reshape(0, 3)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        self.vertices.setflags(write=False)
        self.faces.setflags(write=False)

    @property
    def n_points(self) -> int:
        return self.vertices.shape[0]

    def translated(self, offset) -> "CorrespondedMesh":
        return CorrespondedMesh(self.vertices + np.asarray(offset, dtype=float),
                                self.faces, self.topology_id)

    def transformed(self, rotation, translation) -> "CorrespondedMesh":
        r = np.asarray(rotation, dtype=float)
        t = np.asarray(translation, dtype=float)
        return CorrespondedMesh(self.vertices @ r.T + t, self.faces, self.topology_id)


@dataclass(frozen=True)
class ShapeDataset:
    """A population of corresponded meshes with uniform topology."""

    meshes: list[CorrespondedMesh] = field(default_factory=list)

    def __post_init__(self):
        if len(self.meshes) < 2:
            raise InsufficientDataError(f"dataset needs n >= 2 shapes, got {len(self.meshes)}")
        first = self.meshes[0]
        for m in self.meshes[1:]:
            if m.topology_id != first.topology_id:
                raise TopologyError(
                    f"mixed topologies in dataset: {m.topology_id!r} vs {first.topology_id!r}"
                )
            if m.n_points != first.n_points:
                raise TopologyError(
                    f"vertex count mismatch: {m.n_points} vs {first.n_points}"
                )

    def __len__(self) -> int:
        return len(self.meshes)

    def __iter__(self):
        return iter(self.meshes)

    @property
    def topology_id(self) -> str:
        return self.meshes[0].topology_id

    @property
    def n_points(self) -> int:
        return self.meshes[0].n_points

    @property
    def faces(self) -> np.ndarray:
        return self.meshes[0].faces

    def as_matrix(self) -> np.ndarray:
        """Stack all shapes into an (n, 3N) matrix of shape vectors."""
        return np.stack([vectorize(m) for m in self.meshes])


def vectorize(mesh: CorrespondedMesh) -> np.ndarray:
    """Flatten vertices to (x1, y1, z1, ..., xN, yN, zN)."""
    return mesh.vertices.reshape(-1).copy()


def devectorize(coords: np.ndarray, faces: np.ndarray, topology_id: str) -> CorrespondedMesh:
    """Inverse of :func:`vectorize` for a known topology."""
    coords = np.asarray(coords, dtype=float).reshape(-1)
    if coords.size % 3 != 0:
        raise DimensionError(f"shape vector length {coords.size} is not divisible by 3")
    faces = np.asarray(faces, dtype=int)
    n = coords.size // 3
    if faces.size and faces.max() >= n:
        raise DimensionError(
            f"shape vector encodes {n} vertices but topology references vertex {faces.max()}"
        )
    return CorrespondedMesh(coords.reshape(n, 3), faces, topology_id)


def kabsch_rotation(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Proper rotation (det +1) minimizing ||R @ source.T - target.T||_F.

    Both inputs are (N, 3) point sets already centered at the origin.
    """
    h = source.T @ target
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    flip = np.diag([1.0, 1.0, d])
    return vt.T @ flip @ u.T


def procrustes_objective(points: np.ndarray) -> float:
    """Sum of squared distances of each shape to the mean shape.

    `points` has shape (n, N, 3).
    """
    mean = points.mean(axis=0)
    return float(((points - mean) ** 2).sum())


def rigid_align(dataset: ShapeDataset, tol: float = 1e-10, max_iter: int = 100) -> ShapeDataset:
    """Generalized rigid alignment against an iteratively re-estimated mean.

    Each shape is translated to the common centroid and rotated onto the
    evolving mean shape with the closed-form orthogonal Procrustes rotation.
    No scaling is applied, so intra-shape distances are preserved exactly.
    Iterations stop when the relative decrease of the summed squared
    distance to the mean falls below `tol`.
    """
    pts = np.stack([m.vertices for m in dataset.meshes]).astype(float)
    centroids = pts.mean(axis=1, keepdims=True)
    pts = pts - centroids
    scales = np.sqrt((pts**2).sum(axis=(1, 2)))
    if np.any(scales < 1e-12):
        bad = int(np.argmin(scales))
        raise DegenerateGeometryError(
            f"shape {bad} is degenerate: all points coincide, rotation undefined"
        )

    prev = procrustes_objective(pts)
    for _ in range(max_iter):
        mean = pts.mean(axis=0)
        for i in range(pts.shape[0]):
            r = kabsch_rotation(pts[i], mean)
            pts[i] = pts[i] @ r.T
        obj = procrustes_objective(pts)
        if prev - obj <= tol * max(prev, 1.0):
            break
        prev = obj

    meshes = [
        CorrespondedMesh(pts[i], dataset.faces, dataset.topology_id)
        for i in range(pts.shape[0])
    ]
    return ShapeDataset(meshes)
