"""ASCII OBJ mesh I/O and dataset directories.

Only `v x y z` and `f i j k` records are used (1-based face indices).
The vertex order in the file IS the correspondence order, so writers must
never reorder vertices.  A dataset directory holds one OBJ per shape plus
a `manifest.json` listing the file order and the shared topology id.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import DataError
from .jsonio import dump_path, format_float, load_path
from .shapes import CorrespondedMesh, ShapeDataset

MANIFEST_NAME = "manifest.json"


def read_obj(path, topology_id: str | None = None) -> CorrespondedMesh:
    """Parse an ASCII OBJ file into a corresponded mesh.

    Faces with more than 3 vertices are rejected: correspondence pipelines
    here are triangle-only.  `topology_id` defaults to the file stem.
    """
    path = Path(path)
    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise DataError(f"{path}:{lineno}: vertex line needs 3 coordinates")
                verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
            elif tag == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise DataError(f"{path}:{lineno}: only triangle faces are supported")
                if min(idx) < 1:
                    raise DataError(f"{path}:{lineno}: OBJ face indices are 1-based")
                faces.append((idx[0] - 1, idx[1] - 1, idx[2] - 1))
            # all other records (vn, vt, usemtl, ...) are ignored
    if not verts:
        raise DataError(f"{path}: no vertices found")
    return CorrespondedMesh(
        np.array(verts, dtype=float),
        np.array(faces, dtype=int).reshape(-1, 3),
        topology_id if topology_id is not None else path.stem,
    )


def write_obj(mesh: CorrespondedMesh, path) -> None:
    """Write a mesh as ASCII OBJ, preserving vertex order and full precision."""
    lines = []
    for x, y, z in mesh.vertices:
        lines.append(f"v {format_float(x)} {format_float(y)} {format_float(z)}")
    for a, b, c in mesh.faces:
        lines.append(f"f {a + 1} {b + 1} {c + 1}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def write_dataset(dataset: ShapeDataset, directory, names: list[str] | None = None) -> None:
    """Write all meshes of a dataset plus the ordering manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if names is None:
        width = max(3, len(str(len(dataset) - 1)))
        names = [f"shape_{i:0{width}d}.obj" for i in range(len(dataset))]
    if len(names) != len(dataset):
        raise DataError(f"{len(names)} names for {len(dataset)} shapes")
    for name, mesh in zip(names, dataset.meshes):
        write_obj(mesh, directory / name)
    dump_path({"topology_id": dataset.topology_id, "files": names},
              directory / MANIFEST_NAME)


def read_dataset(directory) -> ShapeDataset:
    """Load a dataset directory in manifest order."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise DataError(f"dataset manifest not found: {manifest_path}")
    manifest = load_path(manifest_path)
    topology_id = manifest.get("topology_id")
    files = manifest.get("files")
    if not isinstance(topology_id, str) or not isinstance(files, list):
        raise DataError(f"{manifest_path}: manifest needs 'topology_id' and 'files'")
    meshes = []
    for name in files:
        p = directory / name
        if not os.path.exists(p):
            raise DataError(f"manifest lists missing file {p}")
        meshes.append(read_obj(p, topology_id=topology_id))
    return ShapeDataset(meshes)
