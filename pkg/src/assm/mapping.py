"""Linear mapping between shape coefficients and anatomical parameters.

The mapping matrix is learned by ordinary least squares on a synthetic
population (standardized measurements regressed on the coefficients, no
intercept).  Its Moore-Penrose pseudo-inverse turns the base model into a
generative model driven by best-fit anatomical parameters; replacing the
mapping with its nearest row-orthonormal matrix (orthogonal Procrustes
solution, via SVD) yields the constrained variant whose parameters drive
mutually independent deformation patterns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import __version__ as _tool_version
from .errors import DataError, DimensionError, InsufficientDataError, RankError
from .jsonio import dump_path, load_path
from .population import StandardizationStats, SyntheticPopulation
from .ssm import BaseSsm, FORMAT_VERSION, model_from_dict, project, sample

RANK_RTOL = 1e-10  # singular values below this fraction of the largest count as zero

KIND_ANAT = "anat"
KIND_OC_ANAT = "oc-anat"


@dataclass(frozen=True)
class MappingQ:
    """Least-squares mapping: standardized measurements = matrix @ alpha."""

    matrix: np.ndarray  # (m, r)
    labels: tuple[str, ...]
    rank_ok: bool
    r_squared: np.ndarray | None = None  # per-label explained variance on the population

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != len(self.labels):
            raise DimensionError(f"mapping matrix {m.shape} does not match labels")
        if not np.all(np.isfinite(m)):
            raise DataError("mapping matrix has non-finite entries")
        object.__setattr__(self, "matrix", m)

    @property
    def covariance(self) -> np.ndarray:
        """Model covariance of the standardized parameters (matrix @ matrix.T)."""
        return self.matrix @ self.matrix.T


@dataclass(frozen=True)
class MappingK:
    """Row-orthonormal mapping from the orthogonal Procrustes problem."""

    matrix: np.ndarray  # (m, r), rows orthonormal
    labels: tuple[str, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        gram = m @ m.T
        if np.max(np.abs(gram - np.eye(m.shape[0]))) > 1e-8:
            raise DataError("mapping rows are not orthonormal")
        object.__setattr__(self, "matrix", m)

    @property
    def covariance(self) -> np.ndarray:
        return np.eye(self.matrix.shape[0])


def fit_mapping(pop: SyntheticPopulation) -> MappingQ:
    """OLS fit of standardized measurements on shape coefficients (no intercept)."""
    if pop.size <= pop.rank:
        raise InsufficientDataError(
            f"population size {pop.size} must exceed model rank {pop.rank}"
        )
    a = pop.alphas
    b = pop.betas_std
    qt, *_ = np.linalg.lstsq(a, b, rcond=None)
    q = qt.T
    sv = np.linalg.svd(q, compute_uv=False)
    rank_ok = bool(sv[-1] > RANK_RTOL * sv[0]) if sv.size else False
    ss_res = ((b - a @ qt) ** 2).sum(axis=0)
    ss_tot = ((b - b.mean(axis=0)) ** 2).sum(axis=0)
    r2 = 1.0 - ss_res / ss_tot
    return MappingQ(q, pop.labels, rank_ok, r2)


def pseudo_inverse(q: MappingQ) -> np.ndarray:
    """Moore-Penrose right inverse matrix.T @ inv(matrix @ matrix.T)."""
    if not q.rank_ok:
        sv = np.linalg.svd(q.matrix, compute_uv=False)
        raise RankError(
            f"mapping is rank deficient: smallest singular value {sv[-1]:.3e} "
            f"vs largest {sv[0]:.3e}"
        )
    m = q.matrix
    return m.T @ np.linalg.inv(m @ m.T)


def orthogonal_procrustes(q: MappingQ) -> MappingK:
    """Nearest row-orthonormal matrix in Frobenius norm: U V^T from the SVD."""
    sv = np.linalg.svd(q.matrix, compute_uv=False)
    if sv[-1] <= RANK_RTOL * sv[0]:
        raise RankError(
            f"orthogonal factor is not unique: singular value {sv[-1]:.3e} is "
            f"numerically zero (largest {sv[0]:.3e})"
        )
    u, _, vt = np.linalg.svd(q.matrix, full_matrices=False)
    return MappingK(u @ vt, q.labels)


# ---------------------------------------------------------------------------
# anatomical generative models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnatModel:
    """Generative model mean + basis D W beta over anatomical parameters.

    `deformation` is W: pseudo-inverse of the mapping for the best-fit kind,
    mapping transpose for the orthogonally constrained kind (r x m both).
    `mapping` keeps the forward matrix (m x r) for parameter readout.
    """

    base: BaseSsm
    kind: str
    labels: tuple[str, ...]
    mapping: np.ndarray      # (m, r) forward matrix (Q or K)
    deformation: np.ndarray  # (r, m)
    stats: StandardizationStats

    def __post_init__(self):
        if self.kind not in (KIND_ANAT, KIND_OC_ANAT):
            raise DataError(f"unknown model kind {self.kind!r}")
        mp = np.asarray(self.mapping, dtype=float)
        w = np.asarray(self.deformation, dtype=float)
        m = len(self.labels)
        if mp.shape != (m, self.base.rank) or w.shape != (self.base.rank, m):
            raise DimensionError(
                f"mapping {mp.shape} / deformation {w.shape} do not match "
                f"rank {self.base.rank} and {m} labels"
            )
        if tuple(self.stats.labels) != tuple(self.labels):
            raise DataError("stats labels do not match model labels")
        object.__setattr__(self, "mapping", mp)
        object.__setattr__(self, "deformation", w)

    @property
    def n_params(self) -> int:
        return len(self.labels)

    @property
    def param_covariance(self) -> np.ndarray:
        """Covariance of standardized parameters under the latent normal."""
        if self.kind == KIND_OC_ANAT:
            return np.eye(self.n_params)
        return self.mapping @ self.mapping.T

    def label_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DataError(f"unknown parameter label {label!r}; have {self.labels}") from None


def build_anat(base: BaseSsm, q: MappingQ, stats: StandardizationStats) -> AnatModel:
    if q.matrix.shape[1] != base.rank:
        raise DimensionError(
            f"mapping has {q.matrix.shape[1]} coefficient columns, model rank is {base.rank}"
        )
    return AnatModel(base, KIND_ANAT, q.labels, q.matrix, pseudo_inverse(q), stats)


def build_oc_anat(base: BaseSsm, k: MappingK, stats: StandardizationStats) -> AnatModel:
    if k.matrix.shape[1] != base.rank:
        raise DimensionError(
            f"mapping has {k.matrix.shape[1]} coefficient columns, model rank is {base.rank}"
        )
    return AnatModel(base, KIND_OC_ANAT, k.labels, k.matrix, k.matrix.T, stats)


def generate_from_params(model: AnatModel, beta_std: np.ndarray) -> np.ndarray:
    """Shape vector for a full standardized parameter vector."""
    beta_std = np.asarray(beta_std, dtype=float).reshape(-1)
    if beta_std.size != model.n_params:
        raise DimensionError(
            f"expected {model.n_params} parameters, got {beta_std.size}"
        )
    alpha = model.deformation @ beta_std
    return sample(model.base, alpha)


def generate_from_physical(model: AnatModel, values: dict[str, float]) -> tuple[np.ndarray, np.ndarray]:
    """Shape for physical-unit parameter values; unset labels follow the model.

    Set labels are standardized with the stored stats and the remaining
    ones take their conditional expectation under the model's parameter
    covariance (identity for the constrained kind, so they stay at the
    mean).  Returns (shape_vector, full standardized parameter vector).
    """
    for label in values:
        model.label_index(label)
    pinned = {
        i: (values[c] - model.stats.mean[i]) / model.stats.std[i]
        for i, c in enumerate(model.labels) if c in values
    }
    beta_std = complete_params(model, pinned)
    return generate_from_params(model, beta_std), beta_std


def complete_params(model: AnatModel, pinned: dict[int, float]) -> np.ndarray:
    """Conditional expectation of all parameters given pinned standardized values."""
    beta = np.zeros(model.n_params)
    if not pinned:
        return beta
    idx = sorted(pinned)
    vals = np.array([pinned[i] for i in idx])
    beta[idx] = vals
    free = [i for i in range(model.n_params) if i not in pinned]
    if free:
        cov = model.param_covariance
        css = cov[np.ix_(idx, idx)]
        cfs = cov[np.ix_(free, idx)]
        try:
            beta[free] = cfs @ np.linalg.solve(css, vals)
        except np.linalg.LinAlgError as exc:
            raise RankError("parameter covariance is singular on the pinned set") from exc
    return beta


def read_params(model: AnatModel, shape: np.ndarray, method: str = "mapping") -> np.ndarray:
    """Standardized parameter readout of a shape.

    "mapping" forward-maps the shape's projection through the learned
    matrix; "shape-lstsq" instead solves for the parameters whose generated
    shape is closest to the input in shape space (least squares against the
    deformation columns).
    """
    alpha = project(model.base, shape)
    if method == "mapping":
        return model.mapping @ alpha
    if method == "shape-lstsq":
        design = model.base.mode_scales[:, None] * model.deformation
        beta, *_ = np.linalg.lstsq(design, model.base.mode_scales * alpha, rcond=None)
        return beta
    raise DataError(f"unknown readout method {method!r}")


def read_params_physical(model: AnatModel, shape: np.ndarray,
                         method: str = "mapping") -> dict[str, float]:
    std = read_params(model, shape, method)
    phys = model.stats.destandardize(std)
    return dict(zip(model.labels, (float(v) for v in phys)))


# ---------------------------------------------------------------------------
# variability and sub-models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VariabilityReport:
    """Per-parameter deformation variance, absolute and as fraction of total."""

    labels: tuple[str, ...]
    variance: np.ndarray            # mm^2 per label
    normalized: np.ndarray          # variance / sum(model eigenvalues)
    order: tuple[int, ...]          # descending variance; ties broken by label

    def sorted_labels(self) -> tuple[str, ...]:
        return tuple(self.labels[i] for i in self.order)


def variability(model: AnatModel) -> VariabilityReport:
    """Shape variance induced by each parameter: sum_i W_ij^2 lambda_i."""
    w = model.deformation
    kappa = (w**2 * model.base.eigenvalues[:, None]).sum(axis=0)
    total = float(model.base.eigenvalues.sum())
    normalized = kappa / total if total > 0 else np.zeros_like(kappa)
    order = tuple(sorted(range(len(model.labels)),
                         key=lambda j: (-kappa[j], model.labels[j])))
    return VariabilityReport(model.labels, kappa, normalized, order)


def sub_model(model: AnatModel, drop_label: str) -> AnatModel:
    """Remove one parameter.

    The best-fit kind drops the label's row of the mapping and recomputes
    the pseudo-inverse from the sub-matrix; the constrained kind reuses the
    surviving rows unchanged, which leaves their variability intact.
    """
    j = model.label_index(drop_label)
    if model.n_params <= 1:
        raise DataError("cannot remove the last parameter")
    keep = [i for i in range(model.n_params) if i != j]
    labels = tuple(model.labels[i] for i in keep)
    sub_matrix = model.mapping[keep]
    stats = StandardizationStats(
        labels, model.stats.mean[keep], model.stats.std[keep],
        {c: model.stats.units.get(c, "") for c in labels},
    )
    if model.kind == KIND_OC_ANAT:
        return AnatModel(model.base, model.kind, labels, sub_matrix, sub_matrix.T, stats)
    q = MappingQ(sub_matrix, labels, rank_ok=True)
    sv = np.linalg.svd(sub_matrix, compute_uv=False)
    if sv[-1] <= RANK_RTOL * sv[0]:
        raise RankError(f"dropping {drop_label!r} leaves a rank-deficient mapping")
    return AnatModel(model.base, model.kind, labels, sub_matrix, pseudo_inverse(q), stats)


# ---------------------------------------------------------------------------
# parameter sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    """One-parameter sweep trajectories and fitted cross-parameter slopes.

    `readout_std` holds the model-space parameter readout of each generated
    shape (forward mapping of its projection); slopes are fitted on these.
    Because correlated parameters co-move under the best-fit kind, the swept
    trajectory pins the chosen parameter and lets the others follow their
    conditional expectation.  `measured_raw` re-runs the geometric recipe on
    each generated mesh (physical units) when landmarks are supplied.
    """

    label: str
    labels: tuple[str, ...]
    t_values: np.ndarray        # swept standardized values
    readout_std: np.ndarray     # (steps, m)
    readout_raw: np.ndarray     # (steps, m) physical units
    slopes: np.ndarray          # (m,) d(readout_std)/dt
    measured_raw: np.ndarray | None = None  # (steps, m) geometric re-measurement


def sweep(model: AnatModel, label: str, steps: int = 13, span: float = 3.0,
          recipe=None, landmarks=None) -> SweepResult:
    """Vary one standardized parameter over +-span and record all readouts."""
    if steps < 2:
        raise DataError("sweep needs at least 2 steps")
    from .morphometry import measure, positions_from_array
    from .population import landmark_sampler

    j = model.label_index(label)
    ts = np.linspace(-span, span, steps)
    readout = np.empty((steps, model.n_params))
    measured = None
    sampler = None
    if recipe is not None and landmarks is not None:
        sampler = landmark_sampler(model.base, landmarks)
        measured = np.empty((steps, model.n_params))
    for i, t in enumerate(ts):
        beta = complete_params(model, {j: float(t)})
        alpha = model.deformation @ beta
        readout[i] = model.mapping @ alpha
        if sampler is not None:
            points = sampler(alpha)
            mv = measure(recipe, positions_from_array(landmarks, points))
            measured[i] = mv.as_array(model.labels)
    # least-squares slope of each standardized readout against t
    t_center = ts - ts.mean()
    denom = float(t_center @ t_center)
    slopes = (t_center @ (readout - readout.mean(axis=0))) / denom
    raw = model.stats.destandardize(readout)
    return SweepResult(label, model.labels, ts, readout, raw, slopes, measured)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_anat_model(model: AnatModel, path, seed: int | None = None) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "labels": list(model.labels),
        "stats": model.stats.to_dict(),
        "Q" if model.kind == KIND_ANAT else "K": model.mapping.reshape(-1),
        "deformation_matrix": model.deformation.reshape(-1),
        "base": _base_to_dict(model.base, seed),
    }
    dump_path(doc, path)


def _base_to_dict(base: BaseSsm, seed: int | None = None) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "N": base.n_points,
        "rank": base.rank,
        "mean": base.mean,
        "eigenvalues": base.eigenvalues,
        "basis": base.basis.reshape(-1),
        "topology": {"id": base.topology_id, "faces": base.faces},
        "provenance": {"n": base.n_training, "seed": seed, "tool_version": _tool_version},
    }


def load_anat_model(path) -> AnatModel:
    doc = load_path(path)
    if doc.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported model format_version {doc.get('format_version')!r}")
    base = model_from_dict(doc["base"])
    labels = tuple(str(c) for c in doc["labels"])
    m = len(labels)
    raw = doc.get("Q", doc.get("K"))
    if raw is None:
        raise DataError(f"{path}: model file carries neither a Q nor a K matrix")
    mapping = np.asarray(raw, dtype=float).reshape(m, base.rank)
    deformation = np.asarray(doc["deformation_matrix"], dtype=float).reshape(base.rank, m)
    stats = StandardizationStats.from_dict(doc["stats"])
    return AnatModel(base, str(doc["kind"]), labels, mapping, deformation, stats)


# mapping files -------------------------------------------------------------

def save_mapping(obj, stats: StandardizationStats, path) -> None:
    if isinstance(obj, MappingQ):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": KIND_ANAT,
            "labels": list(obj.labels),
            "matrix": obj.matrix.reshape(-1),
            "rank": obj.matrix.shape[1],
            "rank_ok": obj.rank_ok,
            "r_squared": obj.r_squared if obj.r_squared is not None else None,
            "stats": stats.to_dict(),
        }
    elif isinstance(obj, MappingK):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": KIND_OC_ANAT,
            "labels": list(obj.labels),
            "matrix": obj.matrix.reshape(-1),
            "rank": obj.matrix.shape[1],
            "stats": stats.to_dict(),
        }
    else:
        raise DataError(f"cannot serialize mapping of type {type(obj).__name__}")
    dump_path(doc, path)


def load_mapping(path) -> tuple[object, StandardizationStats, str]:
    doc = load_path(path)
    labels = tuple(str(c) for c in doc["labels"])
    rank = int(doc["rank"])
    matrix = np.asarray(doc["matrix"], dtype=float).reshape(len(labels), rank)
    stats = StandardizationStats.from_dict(doc["stats"])
    kind = str(doc["kind"])
    if kind == KIND_ANAT:
        r2 = doc.get("r_squared")
        q = MappingQ(matrix, labels, bool(doc.get("rank_ok", True)),
                     None if r2 is None else np.asarray(r2, dtype=float))
        return q, stats, kind
    if kind == KIND_OC_ANAT:
        return MappingK(matrix, labels), stats, kind
    raise DataError(f"unknown mapping kind {kind!r}")
