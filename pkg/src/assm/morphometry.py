"""Landmark bookkeeping and anatomical measurement recipes.

A landmark set stores vertex indices on a given topology; correspondence
makes transfer to any mesh of the same topology a pure indexing operation.
The femoral recipe produces five measurements (NSA, FV, BW, HD, FL) from 18
landmarks and the scapular recipe six (CSA, GI, GV, GH, GW, SL) from 20.
Custom recipes compose simple distance/angle steps over named landmarks.

Note the landmark traditionally written "GI" (glenoid inferior) is named
GIP here to avoid colliding with the glenoid-inclination measurement label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataError,
    DegenerateGeometryError,
    MissingLandmarkError,
    TopologyError,
)
from .geomfit import angle_deg, fit_circle3d, fit_plane, fit_sphere, project_onto_plane
from .jsonio import dump_path, load_path
from .shapes import CorrespondedMesh

FEMUR_HEAD_POINTS = ("SFH", "HP2", "HP3", "HP4", "HP5", "HP6", "HP7", "HP8", "HP9")
FEMUR_LANDMARKS = FEMUR_HEAD_POINTS + (
    "IMC", "MMC", "PMC", "LLC", "PLC", "ISN", "SNS", "FP", "GT",
)
SCAPULA_RIM_POINTS = (
    "GS", "GIP",
    "IGR1", "IGR2", "IGR3", "IGR4", "IGR5", "IGR6", "IGR7", "IGR8",
    "RIM1", "RIM2", "RIM3", "RIM4", "RIM5", "RIM6",
)
SCAPULA_LANDMARKS = SCAPULA_RIM_POINTS + ("AI", "AS", "TS", "LA")

FEMUR_LABELS = ("NSA", "FV", "BW", "HD", "FL")
SCAPULA_LABELS = ("CSA", "GI", "GV", "GH", "GW", "SL")

FEMUR_UNITS = {"NSA": "deg", "FV": "deg", "BW": "mm", "HD": "mm", "FL": "cm"}
SCAPULA_UNITS = {"CSA": "deg", "GI": "deg", "GV": "deg", "GH": "mm", "GW": "mm", "SL": "mm"}


@dataclass(frozen=True)
class LandmarkSet:
    """Named vertex indices on one topology."""

    topology_id: str
    entries: dict[str, int]

    def __post_init__(self):
        if len(set(self.entries)) != len(self.entries):
            raise DataError("duplicate landmark names")
        for name, idx in self.entries.items():
            if int(idx) < 0:
                raise DataError(f"landmark {name!r} has negative vertex index")

    def indices(self, names) -> np.ndarray:
        missing = [n for n in names if n not in self.entries]
        if missing:
            raise MissingLandmarkError(f"missing landmarks: {', '.join(missing)}")
        return np.array([self.entries[n] for n in names], dtype=int)

    def validate_for(self, n_points: int) -> None:
        bad = {n: i for n, i in self.entries.items() if i >= n_points}
        if bad:
            raise DataError(f"landmark indices out of range for N={n_points}: {bad}")


@dataclass(frozen=True)
class MeasurementVector:
    """Measurement labels with values in physical units (deg / mm / cm)."""

    values: dict[str, float]
    units: dict[str, str]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.values)

    def as_array(self, labels=None) -> np.ndarray:
        labels = self.labels if labels is None else labels
        return np.array([self.values[c] for c in labels], dtype=float)


def transfer_landmarks(landmarks: LandmarkSet, target: CorrespondedMesh) -> dict[str, np.ndarray]:
    """Read landmark positions off any mesh of the same topology."""
    if landmarks.topology_id != target.topology_id:
        raise TopologyError(
            f"landmarks are on {landmarks.topology_id!r}, mesh is {target.topology_id!r}"
        )
    landmarks.validate_for(target.n_points)
    return {name: target.vertices[idx] for name, idx in landmarks.entries.items()}


def positions_from_array(landmarks: LandmarkSet, points: np.ndarray) -> dict[str, np.ndarray]:
    """Landmark positions from an (L, 3) array ordered like `landmarks.entries`."""
    return {name: points[i] for i, name in enumerate(landmarks.entries)}


def _require(positions, names):
    missing = [n for n in names if n not in positions]
    if missing:
        raise MissingLandmarkError(f"missing landmarks: {', '.join(missing)}")
    return {n: np.asarray(positions[n], dtype=float) for n in names}


def measure_femur(positions) -> MeasurementVector:
    """Five femoral measurements from 18 named landmark positions.

    Steps: sphere fit of the nine head points gives the head center and HD;
    the neck axis runs from the foot of the perpendicular on the ISN-SNS
    line to the head center; the shaft axis is FP->GT; NSA is the angle
    between them; FV is the signed angle between neck axis and PLC->PMC
    after projecting both onto the plane orthogonal to the shaft axis
    (positive when the projected neck axis lies anterior of the condylar
    line, i.e. cross(condylar, neck) along the shaft axis); FL is |IMC-SFH|
    in cm and BW is |LLC-MMC| in mm.
    """
    p = _require(positions, FEMUR_LANDMARKS)
    head = fit_sphere([p[name] for name in FEMUR_HEAD_POINTS])
    hd = 2.0 * head.radius

    isn, sns = p["ISN"], p["SNS"]
    seg = sns - isn
    seg_len = np.linalg.norm(seg)
    if seg_len < 1e-12:
        raise DegenerateGeometryError("ISN and SNS coincide; neck line undefined")
    d = seg / seg_len
    foot = isn + ((head.center - isn) @ d) * d
    neck = head.center - foot
    if np.linalg.norm(neck) < 1e-9:
        raise DegenerateGeometryError("head center lies on the ISN-SNS line; neck axis undefined")

    shaft = p["GT"] - p["FP"]
    nsa = angle_deg(neck, shaft)

    shaft_dir = shaft / np.linalg.norm(shaft)
    neck_proj = project_onto_plane(neck, shaft_dir)
    cond_proj = project_onto_plane(p["PMC"] - p["PLC"], shaft_dir)
    fv = angle_deg(neck_proj, cond_proj)
    if np.dot(np.cross(cond_proj, neck_proj), shaft_dir) < 0:
        fv = -fv

    fl = float(np.linalg.norm(p["IMC"] - p["SFH"])) / 10.0  # mm -> cm
    bw = float(np.linalg.norm(p["LLC"] - p["MMC"]))
    return MeasurementVector(
        {"NSA": float(nsa), "FV": float(fv), "BW": bw, "HD": float(hd), "FL": fl},
        dict(FEMUR_UNITS),
    )


def _signed_plane_angle(axis, vector, plane_normal, side_ref) -> float:
    """Angle between axis and `vector` projected into a plane, minus 90 deg.

    The magnitude is the projected angle relative to the plane spanned by
    the axis; the sign follows the projected vector's component along
    `side_ref`.  Flipping `vector` leaves the result unchanged.
    """
    proj = project_onto_plane(np.asarray(vector, dtype=float), plane_normal)
    if np.linalg.norm(proj) < 1e-12:
        raise DegenerateGeometryError("projected normal vanishes; angle undefined")
    ang = angle_deg(axis, proj) - 90.0
    side = float(proj @ side_ref)
    return ang if side >= 0 else -ang


def measure_scapula(positions) -> MeasurementVector:
    """Six scapular measurements from 20 named landmark positions.

    Steps: circle fit of IGR1-8 gives the glenoid center point (GCP) and
    GW; the scapular plane passes through GCP, AI and TS; the axial plane
    is orthogonal to it and parallel to the TS->GCP axis; the glenoid plane
    fits all 16 rim points.  GV (GI) is the angle between the TS->GCP axis
    and the glenoid normal projected onto the axial (scapular) plane, minus
    90 deg, signed by the side the projected normal falls on.  CSA is the
    angle of GIP->GS vs GIP->LA projected onto the scapular plane.  SL is
    |AI-AS| and GH is |GIP-GS|.
    """
    p = _require(positions, SCAPULA_LANDMARKS)
    circ = fit_circle3d([p[n] for n in ("IGR1", "IGR2", "IGR3", "IGR4",
                                        "IGR5", "IGR6", "IGR7", "IGR8")])
    gcp = circ.center
    gw = 2.0 * circ.radius

    axis = gcp - p["TS"]
    axis_len = np.linalg.norm(axis)
    if axis_len < 1e-9:
        raise DegenerateGeometryError("glenoid center coincides with TS; axis undefined")
    axis = axis / axis_len

    ns = np.cross(p["AI"] - gcp, p["TS"] - gcp)
    ns_len = np.linalg.norm(ns)
    if ns_len < 1e-12:
        raise DegenerateGeometryError("GCP, AI, TS are collinear; scapular plane undefined")
    ns = ns / ns_len  # scapular-plane normal
    na = np.cross(axis, ns)
    na /= np.linalg.norm(na)  # axial-plane normal (in-scapular-plane, orthogonal to axis)

    glenoid = fit_sixteen_rim_plane(p)
    gv = _signed_plane_angle(axis, glenoid, na, side_ref=ns)
    gi = _signed_plane_angle(axis, glenoid, ns, side_ref=na)

    v1 = project_onto_plane(p["GS"] - p["GIP"], ns)
    v2 = project_onto_plane(p["LA"] - p["GIP"], ns)
    csa = angle_deg(v1, v2)

    sl = float(np.linalg.norm(p["AI"] - p["AS"]))
    gh = float(np.linalg.norm(p["GIP"] - p["GS"]))
    return MeasurementVector(
        {"CSA": float(csa), "GI": float(gi), "GV": float(gv),
         "GH": gh, "GW": gw, "SL": sl},
        dict(SCAPULA_UNITS),
    )


def fit_sixteen_rim_plane(positions) -> np.ndarray:
    """Unit normal of the plane fitted to the 16 glenoid rim landmarks."""
    return fit_plane([positions[n] for n in SCAPULA_RIM_POINTS]).normal


# ---------------------------------------------------------------------------
# recipes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecipeStep:
    """One step of a custom recipe: a labelled distance or angle."""

    op: str  # "distance" | "angle"
    label: str
    points: tuple[str, ...]
    unit: str = "mm"


@dataclass(frozen=True)
class MeasurementRecipe:
    """Named measurement procedure over a set of required landmarks."""

    identifier: str
    required_landmarks: tuple[str, ...]
    labels: tuple[str, ...]
    units: dict[str, str]
    steps: tuple[RecipeStep, ...] = field(default_factory=tuple)


FEMUR_RECIPE = MeasurementRecipe("femur", FEMUR_LANDMARKS, FEMUR_LABELS, dict(FEMUR_UNITS))
SCAPULA_RECIPE = MeasurementRecipe("scapula", SCAPULA_LANDMARKS, SCAPULA_LABELS,
                                   dict(SCAPULA_UNITS))

_BUILTIN = {"femur": FEMUR_RECIPE, "scapula": SCAPULA_RECIPE}


def get_recipe(identifier: str) -> MeasurementRecipe:
    if identifier not in _BUILTIN:
        raise DataError(f"unknown recipe {identifier!r}; built-ins: {sorted(_BUILTIN)}")
    return _BUILTIN[identifier]


def custom_recipe(identifier: str, steps: list[RecipeStep]) -> MeasurementRecipe:
    names: list[str] = []
    for s in steps:
        expected = 2 if s.op == "distance" else 3
        if s.op not in ("distance", "angle"):
            raise DataError(f"unknown recipe step op {s.op!r}")
        if len(s.points) != expected:
            raise DataError(f"step {s.label!r}: op {s.op!r} needs {expected} points")
        names.extend(s.points)
    required = tuple(dict.fromkeys(names))
    labels = tuple(s.label for s in steps)
    units = {s.label: s.unit for s in steps}
    return MeasurementRecipe(identifier, required, labels, units, tuple(steps))


def measure(recipe: MeasurementRecipe, positions) -> MeasurementVector:
    """Dispatch a recipe over named landmark positions."""
    if recipe.identifier == "femur" and not recipe.steps:
        return measure_femur(positions)
    if recipe.identifier == "scapula" and not recipe.steps:
        return measure_scapula(positions)
    p = _require(positions, recipe.required_landmarks)
    values: dict[str, float] = {}
    for step in recipe.steps:
        if step.op == "distance":
            a, b = (p[n] for n in step.points)
            values[step.label] = float(np.linalg.norm(a - b))
        else:  # angle at the middle point
            a, b, c = (p[n] for n in step.points)
            values[step.label] = float(angle_deg(a - b, c - b))
    return MeasurementVector(values, dict(recipe.units))


def measure_mesh(recipe: MeasurementRecipe, landmarks: LandmarkSet,
                 mesh: CorrespondedMesh) -> MeasurementVector:
    return measure(recipe, transfer_landmarks(landmarks, mesh))


# ---------------------------------------------------------------------------
# landmark file I/O
# ---------------------------------------------------------------------------

def save_landmarks(landmarks: LandmarkSet, recipe_id: str, path) -> None:
    dump_path(
        {"topology_id": landmarks.topology_id, "recipe": recipe_id,
         "landmarks": {k: int(v) for k, v in landmarks.entries.items()}},
        path,
    )


def load_landmarks(path) -> tuple[LandmarkSet, str]:
    doc = load_path(path)
    try:
        lm = LandmarkSet(str(doc["topology_id"]),
                         {str(k): int(v) for k, v in doc["landmarks"].items()})
        return lm, str(doc["recipe"])
    except KeyError as exc:
        raise DataError(f"{path}: landmark file missing key {exc}") from exc
