"""Synthetic populations: model-generated shapes with tracked measurements.

A population stores matched rows of shape coefficients (standard normal
draws) and the anatomical measurements of the generated shapes, both raw
(physical units) and standardized to zero mean / unit variance per label.
Measurements only need landmark positions, so generation samples just the
landmark rows of the model basis; this is exact because sampling is linear
in the coefficients.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, DegenerateGeometryError, InsufficientDataError, NumericalError
from .jsonio import dump_path, format_float, load_path
from .morphometry import LandmarkSet, MeasurementRecipe, measure, positions_from_array
from .ssm import BaseSsm
from .stats import NormalityReport, normality_report, pearson_matrix

MAX_REJECTION_RATE = 0.01


@dataclass(frozen=True)
class StandardizationStats:
    """Per-label mean/std used to move between physical and standardized units."""

    labels: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray
    units: dict[str, str]

    def __post_init__(self):
        if np.any(self.std <= 0):
            raise DataError("standardization std must be positive for every label")

    def standardize(self, raw: np.ndarray) -> np.ndarray:
        return (np.asarray(raw, dtype=float) - self.mean) / self.std

    def destandardize(self, std_values: np.ndarray) -> np.ndarray:
        return np.asarray(std_values, dtype=float) * self.std + self.mean

    def to_dict(self) -> dict:
        return {
            label: {"mean": float(self.mean[i]), "std": float(self.std[i]),
                    "unit": self.units.get(label, "")}
            for i, label in enumerate(self.labels)
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StandardizationStats":
        labels = tuple(doc)
        return cls(
            labels,
            np.array([doc[c]["mean"] for c in labels], dtype=float),
            np.array([doc[c]["std"] for c in labels], dtype=float),
            {c: str(doc[c].get("unit", "")) for c in labels},
        )


@dataclass(frozen=True)
class SyntheticPopulation:
    """Matched (alpha, beta) records of a model-generated population."""

    alphas: np.ndarray       # (M, r)
    betas_raw: np.ndarray    # (M, m), physical units
    stats: StandardizationStats
    seed: int | None = None
    n_rejected: int = 0

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float)
        b = np.asarray(self.betas_raw, dtype=float)
        if a.shape[0] != b.shape[0]:
            raise DataError(f"alphas ({a.shape[0]}) and betas ({b.shape[0]}) row counts differ")
        if b.shape[1] != len(self.stats.labels):
            raise DataError("betas column count does not match stats labels")
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "betas_raw", b)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.stats.labels

    @property
    def size(self) -> int:
        return self.alphas.shape[0]

    @property
    def rank(self) -> int:
        return self.alphas.shape[1]

    @property
    def betas_std(self) -> np.ndarray:
        return self.stats.standardize(self.betas_raw)

    def subset(self, m: int) -> "SyntheticPopulation":
        """First-m prefix with standardization re-estimated on the prefix."""
        if not 1 <= m <= self.size:
            raise DataError(f"subset size {m} out of range 1..{self.size}")
        return from_samples(self.alphas[:m], self.betas_raw[:m],
                            self.labels, self.stats.units, seed=self.seed)


def from_samples(alphas, betas_raw, labels, units, stats: StandardizationStats | None = None,
                 seed: int | None = None, n_rejected: int = 0) -> SyntheticPopulation:
    """Assemble a population, estimating standardization unless provided."""
    betas_raw = np.asarray(betas_raw, dtype=float)
    if stats is None:
        if betas_raw.shape[0] < 2:
            std = np.ones(betas_raw.shape[1])
        else:
            std = betas_raw.std(axis=0, ddof=1)
            if np.any(std <= 0):
                bad = [labels[i] for i in np.nonzero(std <= 0)[0]]
                raise DegenerateGeometryError(f"zero variance measurement(s): {bad}")
        stats = StandardizationStats(tuple(labels), betas_raw.mean(axis=0), std, dict(units))
    return SyntheticPopulation(np.asarray(alphas, dtype=float), betas_raw, stats,
                               seed, n_rejected)


def landmark_sampler(base: BaseSsm, landmarks: LandmarkSet):
    """Return f(alpha) -> (L, 3) landmark positions of the generated shape.

    Extracts the landmark rows of the mean and basis once; evaluating a
    draw then costs O(L * r) instead of O(N * r).
    """
    landmarks.validate_for(base.n_points)
    idx = np.array(list(landmarks.entries.values()), dtype=int)
    coord_idx = (3 * idx[:, None] + np.arange(3)).reshape(-1)
    mean_lm = base.mean[coord_idx]
    basis_lm = base.basis[coord_idx] * base.mode_scales  # (3L, r), D folded in

    def sample_landmarks(alpha: np.ndarray) -> np.ndarray:
        v = mean_lm + basis_lm @ alpha
        return v.reshape(-1, 3)

    return sample_landmarks


def generate_population(base: BaseSsm, recipe: MeasurementRecipe, landmarks: LandmarkSet,
                        n_samples: int, seed: int, force_zero_alpha: bool = False,
                        log=None) -> SyntheticPopulation:
    """Draw standard-normal coefficients, generate shapes, measure them.

    Draws whose measurement degenerates are rejected and redrawn; a
    rejection rate above 1% aborts since it signals an invalid model or
    recipe.  `force_zero_alpha` is a diagnostic mode pinning every draw to
    the mean shape.
    """
    if n_samples < 1:
        raise DataError("population size must be >= 1")
    if landmarks.topology_id != base.topology_id:
        raise DataError(
            f"landmarks are on {landmarks.topology_id!r}, model is {base.topology_id!r}"
        )
    sampler = landmark_sampler(base, landmarks)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    alphas = np.empty((n_samples, base.rank))
    betas = np.empty((n_samples, len(recipe.labels)))
    kept = 0
    rejected = 0
    while kept < n_samples:
        alpha = np.zeros(base.rank) if force_zero_alpha else rng.standard_normal(base.rank)
        points = sampler(alpha)
        positions = positions_from_array(landmarks, points)
        try:
            mv = measure(recipe, positions)
        except NumericalError:
            rejected += 1
            if rejected > 100 + n_samples:  # runaway guard; the 1% check below is the contract
                raise NumericalError(
                    f"rejected {rejected} synthetic draws before filling {n_samples}; "
                    "model or recipe looks invalid"
                )
            continue
        alphas[kept] = alpha
        betas[kept] = mv.as_array(recipe.labels)
        kept += 1
    if rejected and log is not None:
        log(f"redrew {rejected} degenerate synthetic draws")
    if rejected / (rejected + n_samples) > MAX_REJECTION_RATE:
        raise NumericalError(
            f"rejection rate {rejected}/{rejected + n_samples} exceeds "
            f"{MAX_REJECTION_RATE:.0%}; model or recipe looks invalid"
        )
    return from_samples(alphas, betas, recipe.labels, recipe.units,
                        seed=seed, n_rejected=rejected)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationReport:
    """Pearson matrices between measurements and against shape coefficients."""

    labels: tuple[str, ...]
    beta_beta: np.ndarray   # (m, m)
    alpha_beta: np.ndarray  # (r, m)


def pearson_reports(pop: SyntheticPopulation) -> CorrelationReport:
    if pop.size < 3:
        raise InsufficientDataError("correlation reports need at least 3 samples")
    b = pop.betas_std
    return CorrelationReport(pop.labels, pearson_matrix(b), pearson_matrix(pop.alphas, b))


def population_normality(pop: SyntheticPopulation, alpha: float = 0.01) -> NormalityReport:
    return normality_report(pop.labels, pop.betas_raw, alpha)


# ---------------------------------------------------------------------------
# CSV + sidecar stats persistence
# ---------------------------------------------------------------------------

def stats_sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".stats.json")


def save_population(pop: SyntheticPopulation, csv_path) -> None:
    csv_path = Path(csv_path)
    header = [f"alpha_{i + 1}" for i in range(pop.rank)] + list(pop.labels)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(pop.size):
            row = [format_float(v) for v in pop.alphas[i]]
            row += [format_float(v) for v in pop.betas_raw[i]]
            writer.writerow(row)
    dump_path(
        {"labels": list(pop.labels), "stats": pop.stats.to_dict(),
         "seed": pop.seed, "n_rejected": pop.n_rejected},
        stats_sidecar_path(csv_path),
    )


def load_population(csv_path) -> SyntheticPopulation:
    csv_path = Path(csv_path)
    sidecar = stats_sidecar_path(csv_path)
    if not sidecar.exists():
        raise DataError(f"population sidecar not found: {sidecar}")
    doc = load_path(sidecar)
    labels = [str(c) for c in doc["labels"]]
    stats = StandardizationStats.from_dict(doc["stats"])
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    n_alpha = sum(1 for h in header if h.startswith("alpha_"))
    if header[n_alpha:] != labels:
        raise DataError(f"{csv_path}: measurement columns do not match sidecar labels")
    data = np.array(rows, dtype=float)
    return SyntheticPopulation(data[:, :n_alpha], data[:, n_alpha:], stats,
                               doc.get("seed"), int(doc.get("n_rejected", 0)))
