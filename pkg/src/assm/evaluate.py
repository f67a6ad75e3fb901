"""Evaluation protocols: mapping quality, population sizing, leave-one-out.

Leave-one-out rebuilds the base model and both anatomical models without
one shape, then predicts the held-out shape's parameters three ways: the
base route measures the held-out mesh at transferred landmark indices; the
anatomical routes forward-map the shape's projection through the learned
mapping and destandardize.  Errors are absolute differences to ground
truth in physical units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, InsufficientDataError
from .mapping import (
    AnatModel,
    MappingK,
    MappingQ,
    build_anat,
    build_oc_anat,
    fit_mapping,
    orthogonal_procrustes,
    read_params_physical,
    sub_model,
    variability,
)
from .morphometry import LandmarkSet, MeasurementRecipe, measure_mesh
from .population import CorrelationReport, generate_population, pearson_reports
from .shapes import ShapeDataset, vectorize
from .ssm import BaseSsm, build_base


@dataclass(frozen=True)
class MappingAgreement:
    """Mean absolute difference of mapping weights against Pearson estimates."""

    weights_mad: float     # entries of the matrix vs corr(alpha_i, beta_j)
    covariance_mad: float  # entries of matrix @ matrix.T vs corr(beta_j, beta_k)


def mapping_vs_corr(matrix: np.ndarray | MappingQ | MappingK,
                    report: CorrelationReport) -> MappingAgreement:
    m = matrix.matrix if isinstance(matrix, (MappingQ, MappingK)) else np.asarray(matrix)
    if m.shape != report.alpha_beta.T.shape:
        raise DataError(
            f"matrix {m.shape} does not match correlation report "
            f"{report.alpha_beta.T.shape}"
        )
    weights = float(np.abs(m - report.alpha_beta.T).mean())
    cov = float(np.abs(m @ m.T - report.beta_beta).mean())
    return MappingAgreement(weights, cov)


def population_size_study(base: BaseSsm, recipe: MeasurementRecipe,
                          landmarks: LandmarkSet, sizes: list[int],
                          seed: int = 0, reference_factor: int = 10,
                          log=None) -> list[tuple[int, float]]:
    """Mapping error against a large reference population, per training size.

    Study draws for all sizes are nested prefixes of one seeded stream; the
    reference population (reference_factor * max size) uses an independent
    substream, and the error is the mean absolute difference between the
    fitted mapping and the reference Pearson correlations.
    """
    if sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise DataError("sizes must be strictly ascending")
    if min(sizes) <= base.rank:
        raise DataError(f"smallest size {min(sizes)} must exceed model rank {base.rank}")
    ref_pop = generate_population(base, recipe, landmarks,
                                  reference_factor * max(sizes), seed=[seed, 1], log=log)
    ref_report = pearson_reports(ref_pop)
    study_pop = generate_population(base, recipe, landmarks, max(sizes),
                                    seed=[seed, 0], log=log)
    curve = []
    for size in sizes:
        q = fit_mapping(study_pop.subset(size))
        err = float(np.abs(q.matrix - ref_report.alpha_beta.T).mean())
        curve.append((size, err))
    return curve


# ---------------------------------------------------------------------------
# leave-one-out
# ---------------------------------------------------------------------------

MODEL_NAMES = ("base", "anat", "oc-anat")


@dataclass(frozen=True)
class LooReport:
    """Absolute prediction errors per model per label, Table-style."""

    labels: tuple[str, ...]
    units: dict[str, str]
    errors: dict[str, np.ndarray]  # model name -> (n, m) absolute errors

    def summary(self) -> dict[str, dict[str, dict[str, float]]]:
        out: dict[str, dict[str, dict[str, float]]] = {}
        for name, err in self.errors.items():
            out[name] = {}
            for j, label in enumerate(self.labels):
                col = err[:, j]
                out[name][label] = {
                    "mean": float(col.mean()),
                    "std": float(col.std(ddof=1)) if col.size > 1 else 0.0,
                    "min": float(col.min()),
                    "max": float(col.max()),
                }
        return out


def _loo_models(rest: ShapeDataset, recipe, landmarks, n_population, seed, i):
    base = build_base(rest)
    if base.rank == 0:
        # zero-variance training set: the only prediction is the mean shape
        return None, None, base
    pop = generate_population(base, recipe, landmarks, n_population, seed=[seed, i])
    q = fit_mapping(pop)
    k = orthogonal_procrustes(q)
    return build_anat(base, q, pop.stats), build_oc_anat(base, k, pop.stats), base


def loo_evaluate(dataset: ShapeDataset, recipe: MeasurementRecipe,
                 landmarks: LandmarkSet, n_population: int = 1000, seed: int = 0,
                 ground_truth: list[dict[str, float]] | None = None,
                 predictor: str = "mapping", log=None) -> LooReport:
    """Leave-one-out prediction errors for the base and anatomical models.

    `ground_truth` supplies per-shape reference measurements (e.g. the
    generating parameters of a fixture family); when omitted, the landmark
    measurement of each held-out mesh serves as its own reference, which by
    construction makes the base-route error zero.  `predictor` selects how
    the anatomical models read the held-out shape's parameters: "mapping"
    (forward-map the projection) or "shape-lstsq" (least-squares parameter
    fit in shape space).
    """
    n = len(dataset)
    if n < 3:
        raise InsufficientDataError(f"leave-one-out needs n >= 3 shapes, got {n}")
    if ground_truth is not None and len(ground_truth) != n:
        raise DataError("ground_truth must have one entry per shape")
    labels = recipe.labels
    errors = {name: np.zeros((n, len(labels))) for name in MODEL_NAMES}
    for i in range(n):
        held = dataset.meshes[i]
        rest = ShapeDataset([m for j, m in enumerate(dataset.meshes) if j != i])
        anat, oc, base = _loo_models(rest, recipe, landmarks, n_population, seed, i)
        measured = measure_mesh(recipe, landmarks, held)
        truth = ground_truth[i] if ground_truth is not None else measured.values
        held_vec = vectorize(held)
        if anat is None:
            mean_values = measure_mesh(recipe, landmarks, base.mean_mesh()).values
            predictions = {"base": measured.values, "anat": mean_values,
                           "oc-anat": mean_values}
        else:
            predictions = {
                "base": measured.values,
                "anat": read_params_physical(anat, held_vec, predictor),
                "oc-anat": read_params_physical(oc, held_vec, predictor),
            }
        for name, pred in predictions.items():
            errors[name][i] = [abs(pred[c] - truth[c]) for c in labels]
        if log is not None:
            log(f"leave-one-out {i + 1}/{n} done")
    return LooReport(labels, dict(recipe.units), errors)


@dataclass(frozen=True)
class AblationStep:
    removed: tuple[str, ...]          # labels removed so far
    remaining: tuple[str, ...]
    mean_errors: dict[str, float]      # per remaining label
    std_errors: dict[str, float]


def sequential_prediction_study(dataset: ShapeDataset, recipe: MeasurementRecipe,
                                landmarks: LandmarkSet, n_population: int = 200,
                                seed: int = 0,
                                ground_truth: list[dict[str, float]] | None = None,
                                reorthogonalize: bool = False,
                                log=None) -> list[AblationStep]:
    """Prediction errors of constrained sub-models under sequential removal.

    At each step the remaining parameter with the largest induced shape
    variability is removed.  By default surviving rows of the orthonormal
    mapping are reused, so surviving predictions are unchanged; with
    `reorthogonalize` the reduced least-squares mapping is re-solved for
    its nearest row-orthonormal matrix, relaxing the constraint.
    """
    n = len(dataset)
    if n < 3:
        raise InsufficientDataError(f"study needs n >= 3 shapes, got {n}")
    labels = recipe.labels

    # per-iteration models are shared across all ablation steps
    per_shape: list[tuple[AnatModel, AnatModel, dict[str, float], np.ndarray]] = []
    for i in range(n):
        held = dataset.meshes[i]
        rest = ShapeDataset([m for j, m in enumerate(dataset.meshes) if j != i])
        anat, oc, _ = _loo_models(rest, recipe, landmarks, n_population, seed, i)
        if anat is None:
            raise DataError("ablation study needs a non-degenerate dataset")
        truth = (ground_truth[i] if ground_truth is not None
                 else measure_mesh(recipe, landmarks, held).values)
        per_shape.append((anat, oc, truth, vectorize(held)))
        if log is not None:
            log(f"ablation study {i + 1}/{n} models built")

    def step_errors(drop_chain: tuple[str, ...]) -> tuple[dict[str, float], dict[str, float]]:
        errs: dict[str, list[float]] = {c: [] for c in labels if c not in drop_chain}
        for anat, oc, truth, held_vec in per_shape:
            model = oc
            if reorthogonalize:
                sub_q = anat
                for c in drop_chain:
                    sub_q = sub_model(sub_q, c)
                k = orthogonal_procrustes(MappingQ(sub_q.mapping, sub_q.labels, True))
                model = build_oc_anat(sub_q.base, k, sub_q.stats)
            else:
                for c in drop_chain:
                    model = sub_model(model, c)
            pred = read_params_physical(model, held_vec)
            for c in errs:
                errs[c].append(abs(pred[c] - truth[c]))
        means = {c: float(np.mean(v)) for c, v in errs.items()}
        stds = {c: float(np.std(v, ddof=1)) if len(v) > 1 else 0.0 for c, v in errs.items()}
        return means, stds

    # removal order from the full constrained model of the whole dataset
    whole_base = build_base(dataset)
    pop = generate_population(whole_base, recipe, landmarks, n_population, seed=[seed, n])
    oc_full = build_oc_anat(whole_base, orthogonal_procrustes(fit_mapping(pop)), pop.stats)

    steps: list[AblationStep] = []
    removed: tuple[str, ...] = ()
    current = oc_full
    while True:
        means, stds = step_errors(removed)
        steps.append(AblationStep(removed, tuple(c for c in labels if c not in removed),
                                  means, stds))
        if len(labels) - len(removed) <= 1:
            break
        v = variability(current)
        drop = v.sorted_labels()[0]
        removed = removed + (drop,)
        current = sub_model(current, drop)
    return steps
