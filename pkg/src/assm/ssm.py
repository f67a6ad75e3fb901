"""PCA statistical shape model over corresponded shape vectors.

The model is a normal distribution mean + basis * diag(sqrt(eigenvalues)) *
coefficients.  Because 3N greatly exceeds the sample count, eigenpairs of
the sample covariance are computed from the n x n Gram matrix of centered
shape vectors (snapshot method); the nonzero spectrum is identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import __version__ as _tool_version
from .errors import (
    DataError,
    DimensionError,
    InsufficientDataError,
)
from .jsonio import dump_path, load_path
from .shapes import CorrespondedMesh, ShapeDataset, devectorize

EIGENVALUE_RTOL = 1e-10  # eigenvalues below this fraction of the largest are dropped

FORMAT_VERSION = 1


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive.

    Makes serialized models reproducible across LAPACK builds.
    """
    out = basis.copy()
    for j in range(out.shape[1]):
        k = int(np.argmax(np.abs(out[:, j])))
        if out[k, j] < 0:
            out[:, j] = -out[:, j]
    return out


@dataclass(frozen=True)
class BaseSsm:
    """PCA model: mean (3N,), eigenvalues (r,) descending, basis (3N, r)."""

    mean: np.ndarray
    eigenvalues: np.ndarray
    basis: np.ndarray
    faces: np.ndarray
    topology_id: str
    n_training: int = 0

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        lam = np.asarray(self.eigenvalues, dtype=float).reshape(-1)
        basis = np.asarray(self.basis, dtype=float)
        if basis.size == 0:
            basis = basis.reshape(mean.size, 0)
        if basis.shape != (mean.size, lam.size):
            raise DimensionError(
                f"basis shape {basis.shape} does not match mean {mean.size} / rank {lam.size}"
            )
        if lam.size and np.any(np.diff(lam) > 0):
            raise DataError("eigenvalues must be sorted in descending order")
        if np.any(lam < 0):
            raise DataError("eigenvalues must be non-negative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "faces", np.asarray(self.faces, dtype=int).reshape(-1, 3))

    @property
    def rank(self) -> int:
        return self.eigenvalues.size

    @property
    def n_points(self) -> int:
        return self.mean.size // 3

    @property
    def mode_scales(self) -> np.ndarray:
        """diag of D: per-mode standard deviations sqrt(lambda_i), mm."""
        return np.sqrt(self.eigenvalues)

    def mean_mesh(self) -> CorrespondedMesh:
        return devectorize(self.mean, self.faces, self.topology_id)


def build_base(dataset: ShapeDataset) -> BaseSsm:
    """Estimate the PCA model from an aligned dataset (divisor n - 1)."""
    x = dataset.as_matrix()
    return _build_from_matrix(x, dataset.faces, dataset.topology_id)


def _build_from_matrix(x: np.ndarray, faces: np.ndarray, topology_id: str,
                       allow_single: bool = False) -> BaseSsm:
    n = x.shape[0]
    if n < 2 and not allow_single:
        raise InsufficientDataError(f"need at least 2 shapes to build a model, got {n}")
    mean = x.mean(axis=0)
    if n < 2:
        return BaseSsm(mean, np.zeros(0), np.zeros((x.shape[1], 0)), faces, topology_id, n)
    xc = x - mean
    gram = (xc @ xc.T) / (n - 1)
    lam, u = np.linalg.eigh(gram)
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    u = u[:, order]
    cutoff = EIGENVALUE_RTOL * max(lam[0], 0.0)
    keep = lam > cutoff if lam.size and lam[0] > 0 else np.zeros(lam.size, dtype=bool)
    keep[min(n - 1, keep.size):] = False  # rank of the covariance is at most n - 1
    lam = lam[keep]
    u = u[:, keep]
    # lift Gram eigenvectors to covariance eigenvectors and normalize
    basis = xc.T @ u
    norms = np.sqrt((n - 1) * lam)
    basis /= norms
    basis = _fix_signs(basis)
    return BaseSsm(mean, lam, basis, faces, topology_id, n)


def sample(model: BaseSsm, alpha: np.ndarray) -> np.ndarray:
    """Generate the shape vector mean + basis * diag(sqrt(lambda)) * alpha."""
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    if alpha.size != model.rank:
        raise DimensionError(f"alpha has {alpha.size} entries, model rank is {model.rank}")
    if model.rank == 0:
        return model.mean.copy()
    return model.mean + model.basis @ (model.mode_scales * alpha)


def sample_mesh(model: BaseSsm, alpha: np.ndarray) -> CorrespondedMesh:
    return devectorize(sample(model, alpha), model.faces, model.topology_id)


def project(model: BaseSsm, shape: np.ndarray) -> np.ndarray:
    """Least-squares coefficients of a shape vector in the model subspace."""
    shape = np.asarray(shape, dtype=float).reshape(-1)
    if shape.size != model.mean.size:
        raise DimensionError(
            f"shape vector length {shape.size} does not match model ({model.mean.size})"
        )
    if model.rank == 0:
        raise DataError("rank-0 model has no coefficients to project onto")
    return (model.basis.T @ (shape - model.mean)) / model.mode_scales


def reconstruct(model: BaseSsm, shape: np.ndarray, n_modes: int | None = None) -> np.ndarray:
    """Project a shape onto the first `n_modes` components and resynthesize."""
    if model.rank == 0:
        return model.mean.copy()
    alpha = project(model, shape)
    if n_modes is not None:
        alpha = alpha.copy()
        alpha[n_modes:] = 0.0
    return sample(model, alpha)


# ---------------------------------------------------------------------------
# robustness metrics
# ---------------------------------------------------------------------------

def compactness(model: BaseSsm, n_modes: int) -> float:
    """Fraction of total variance captured by the first `n_modes` components."""
    if not 1 <= n_modes <= model.rank:
        raise DataError(f"n_modes must be in [1, {model.rank}], got {n_modes}")
    lam = model.eigenvalues
    return float(lam[:n_modes].sum() / lam.sum())


def generality(dataset: ShapeDataset, n_modes: int, warn=None) -> float:
    """Mean squared leave-one-out reconstruction error with `n_modes` components.

    For each shape the model is rebuilt without it and the shape is
    reconstructed from its projection onto the first `n_modes` components.
    If a reduced model has lower rank than requested, the rank is clamped.
    """
    x = dataset.as_matrix()
    n = x.shape[0]
    total = 0.0
    for i in range(n):
        rest = np.delete(x, i, axis=0)
        submodel = _build_from_matrix(rest, dataset.faces, dataset.topology_id,
                                      allow_single=True)
        r = min(n_modes, submodel.rank)
        if r < n_modes and warn is not None:
            warn(f"leave-one-out model rank {submodel.rank} < requested {n_modes}; clamped")
        recon = reconstruct(submodel, x[i], r) if r > 0 else submodel.mean
        total += float(((recon - x[i]) ** 2).sum())
    return total / n


def specificity(model: BaseSsm, dataset: ShapeDataset, n_modes: int,
                n_samples: int = 200, seed: int = 0) -> float:
    """Mean squared distance of random model samples to the nearest training shape.

    Coefficients are drawn standard normal on the first `n_modes` components
    (remaining modes zero); deterministic for a given seed.
    """
    if n_samples < 1:
        raise DataError("n_samples must be >= 1")
    r = min(n_modes, model.rank)
    x = dataset.as_matrix()
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    total = 0.0
    for _ in range(n_samples):
        alpha = np.zeros(model.rank)
        alpha[:r] = rng.standard_normal(r)
        s = sample(model, alpha)
        d2 = ((x - s) ** 2).sum(axis=1)
        total += float(d2.min())
    return total / n_samples


@dataclass(frozen=True)
class ModelMetrics:
    """Compactness/generality/specificity curves indexed by retained modes 1..r.

    The `*_sq` columns are the squared-norm definitions; the `*_mm` columns
    are root-mean-square per-vertex distances for figure-style reporting.
    """

    n_modes: np.ndarray
    compactness: np.ndarray
    generality_sq: np.ndarray
    specificity_sq: np.ndarray
    n_points: int
    generality_mm: np.ndarray = field(init=False)
    specificity_mm: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "generality_mm", np.sqrt(self.generality_sq / self.n_points))
        object.__setattr__(self, "specificity_mm", np.sqrt(self.specificity_sq / self.n_points))


def compute_metrics(model: BaseSsm, dataset: ShapeDataset,
                    n_samples: int = 200, seed: int = 0, warn=None) -> ModelMetrics:
    """Evaluate all three robustness metrics for every retained-mode count."""
    rr = np.arange(1, model.rank + 1)
    comp = np.array([compactness(model, r) for r in rr])
    gen = np.array([generality(dataset, r, warn=warn) for r in rr])
    spec = np.array([specificity(model, dataset, r, n_samples, seed) for r in rr])
    return ModelMetrics(rr, comp, gen, spec, model.n_points)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_model(model: BaseSsm, path, seed: int | None = None) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "N": model.n_points,
        "rank": model.rank,
        "mean": model.mean,
        "eigenvalues": model.eigenvalues,
        "basis": model.basis.reshape(-1),  # row-major (3N * r)
        "topology": {"id": model.topology_id, "faces": model.faces},
        "provenance": {
            "n": model.n_training,
            "seed": seed,
            "tool_version": _tool_version,
        },
    }
    dump_path(doc, path)


def model_from_dict(doc: dict) -> BaseSsm:
    if doc.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported model format_version {doc.get('format_version')!r}")
    n = int(doc["N"])
    rank = int(doc["rank"])
    basis = np.asarray(doc["basis"], dtype=float).reshape(3 * n, rank)
    topo = doc["topology"]
    return BaseSsm(
        np.asarray(doc["mean"], dtype=float),
        np.asarray(doc["eigenvalues"], dtype=float),
        basis,
        np.asarray(topo["faces"], dtype=int).reshape(-1, 3),
        str(topo["id"]),
        int(doc.get("provenance", {}).get("n", 0)),
    )


def load_model(path) -> BaseSsm:
    return model_from_dict(load_path(path))
