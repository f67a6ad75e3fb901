"""Deterministic parametric test bones with analytically known measurements.

Two stylized mesh families are provided: a long bone driven by five
parameters (length, head diameter, neck-shaft angle, torsion, condylar
width) and a scapula-like plate driven by six (blade length, rim height,
rim diameter, inclination, version, acromion angle).  Landmarks are placed
analytically so the femoral/scapular measurement recipes recover the
generating parameters exactly (up to flotation-point error); every mesh of
a family shares one topology, with correspondence by construction.

These are stylized test objects, not anatomical surrogates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .morphometry import (
    FEMUR_LABELS,
    FEMUR_LANDMARKS,
    SCAPULA_LABELS,
    SCAPULA_LANDMARKS,
    LandmarkSet,
)
from .shapes import CorrespondedMesh, ShapeDataset

FEMUR_TOPOLOGY = "fixture-femur-v1"
SCAPULA_TOPOLOGY = "fixture-scapula-v1"

_DEG = math.pi / 180.0


@dataclass(frozen=True)
class FemurParams:
    """Generating parameters: lengths in cm/mm, angles in degrees."""

    length_cm: float = 43.0
    head_diameter_mm: float = 52.0
    neck_shaft_angle_deg: float = 125.0
    version_deg: float = 14.0
    condylar_width_mm: float = 84.0

    def validate(self) -> None:
        if min(self.length_cm, self.head_diameter_mm, self.condylar_width_mm) <= 0:
            raise DataError("femur dimensions must be positive")
        if not 5.0 < self.neck_shaft_angle_deg < 175.0:
            raise DataError("neck-shaft angle must lie in (5, 175) degrees")
        if abs(self.version_deg) >= 85.0:
            raise DataError("version must lie in (-85, 85) degrees")

    def as_measurements(self) -> dict[str, float]:
        return {
            "NSA": self.neck_shaft_angle_deg,
            "FV": self.version_deg,
            "BW": self.condylar_width_mm,
            "HD": self.head_diameter_mm,
            "FL": self.length_cm,
        }


@dataclass(frozen=True)
class ScapulaParams:
    """Generating parameters: lengths in mm, angles in degrees."""

    blade_length_mm: float = 155.0
    rim_height_mm: float = 36.0
    rim_diameter_mm: float = 28.0
    inclination_deg: float = 8.0
    version_deg: float = 5.0
    acromion_angle_deg: float = 33.0

    def validate(self) -> None:
        if min(self.blade_length_mm, self.rim_height_mm, self.rim_diameter_mm) <= 0:
            raise DataError("scapula dimensions must be positive")
        if self.rim_height_mm <= 0.5 * self.rim_diameter_mm + 1.0:
            raise DataError("rim height must exceed the rim radius (pear-shaped rim)")
        if not 0.0 < self.acromion_angle_deg < 90.0:
            raise DataError("acromion angle must lie in (0, 90) degrees")
        if abs(self.inclination_deg) >= 45.0 or abs(self.version_deg) >= 45.0:
            raise DataError("rim tilts must lie in (-45, 45) degrees")
        # the inclination/version recipe couples the two tilts at zero:
        # a rim normal giving zero version also projects to zero inclination
        if (self.version_deg == 0.0) != (self.inclination_deg == 0.0):
            raise DataError("version and inclination can only vanish together")

    def as_measurements(self) -> dict[str, float]:
        return {
            "CSA": self.acromion_angle_deg,
            "GI": self.inclination_deg,
            "GV": self.version_deg,
            "GH": self.rim_height_mm,
            "GW": self.rim_diameter_mm,
            "SL": self.blade_length_mm,
        }


# ---------------------------------------------------------------------------
# mesh assembly helpers
# ---------------------------------------------------------------------------

class _Builder:
    def __init__(self):
        self.verts: list[np.ndarray] = []
        self.faces: list[tuple[int, int, int]] = []

    def add_vertex(self, p) -> int:
        self.verts.append(np.asarray(p, dtype=float))
        return len(self.verts) - 1

    def add_grid(self, points: np.ndarray, wrap: bool = False) -> None:
        """Triangulate an (nu, nv, 3) grid; wraps the v direction when closed."""
        nu, nv, _ = points.shape
        base = len(self.verts)
        for i in range(nu):
            for j in range(nv):
                self.verts.append(points[i, j])
        vlim = nv if wrap else nv - 1
        for i in range(nu - 1):
            for j in range(vlim):
                j2 = (j + 1) % nv
                a = base + i * nv + j
                b = base + i * nv + j2
                c = base + (i + 1) * nv + j
                d = base + (i + 1) * nv + j2
                self.faces.append((a, b, d))
                self.faces.append((a, d, c))

    def build(self, topology_id: str) -> CorrespondedMesh:
        return CorrespondedMesh(np.array(self.verts), np.array(self.faces, dtype=int),
                                topology_id)


def _frame(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors orthogonal to `direction` (deterministic choice)."""
    d = direction / np.linalg.norm(direction)
    helper = np.array([1.0, 0.0, 0.0]) if abs(d[0]) <= 0.9 else np.array([0.0, 0.0, 1.0])
    e1 = np.cross(d, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(d, e1)


def _tube(b: _Builder, p0, p1, radius: float, n_rings: int, n_around: int,
          flare: float = 1.0) -> None:
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    e1, e2 = _frame(p1 - p0)
    ts = np.linspace(0.0, 1.0, n_rings)
    angles = np.linspace(0.0, 2.0 * math.pi, n_around, endpoint=False)
    grid = np.empty((n_rings, n_around, 3))
    for i, t in enumerate(ts):
        center = p0 + t * (p1 - p0)
        r = radius * (1.0 + (flare - 1.0) * t)
        for j, ang in enumerate(angles):
            grid[i, j] = center + r * (math.cos(ang) * e1 + math.sin(ang) * e2)
    b.add_grid(grid, wrap=True)


def _ellipsoid(b: _Builder, center, semi_axes, n_lat: int, n_lon: int) -> None:
    center = np.asarray(center, dtype=float)
    rx, ry, rz = semi_axes
    lats = np.linspace(0.0, math.pi, n_lat + 2)[1:-1]
    lons = np.linspace(0.0, 2.0 * math.pi, n_lon, endpoint=False)
    grid = np.empty((n_lat, n_lon, 3))
    for i, la in enumerate(lats):
        for j, lo in enumerate(lons):
            grid[i, j] = center + np.array(
                [rx * math.sin(la) * math.cos(lo),
                 ry * math.sin(la) * math.sin(lo),
                 rz * math.cos(la)]
            )
    b.add_grid(grid, wrap=True)
    # pole fans
    top = b.add_vertex(center + np.array([0.0, 0.0, rz]))
    bot = b.add_vertex(center + np.array([0.0, 0.0, -rz]))
    first = len(b.verts) - 2 - n_lat * n_lon
    for j in range(n_lon):
        j2 = (j + 1) % n_lon
        b.faces.append((top, first + j, first + j2))
        last = first + (n_lat - 1) * n_lon
        b.faces.append((bot, last + j2, last + j))


# ---------------------------------------------------------------------------
# femur
# ---------------------------------------------------------------------------

def make_femur(params: FemurParams = FemurParams()) -> tuple[CorrespondedMesh, LandmarkSet]:
    """Build the stylized long bone and its 18 landmarks."""
    params.validate()
    length = 10.0 * params.length_cm  # mm
    radius = 0.5 * params.head_diameter_mm
    psi = params.neck_shaft_angle_deg * _DEG
    tau = params.version_deg * _DEG
    width = params.condylar_width_mm

    neck_dir = np.array(
        [math.sin(psi) * math.cos(tau), math.sin(psi) * math.sin(tau), math.cos(psi)]
    )
    neck_len = radius + 22.0
    sfh_z = length + 10.0
    shaft_top = sfh_z + 5.0 - neck_len * math.cos(psi) - radius
    neck_base = np.array([0.0, 0.0, shaft_top - 5.0])
    head_center = neck_base + neck_len * neck_dir

    ez = np.array([0.0, 0.0, 1.0])
    sfh = head_center + radius * ez
    # remaining head points: two rings on the exact sphere
    head_points = [sfh]
    for polar, azimuths in ((50.0, (0.0, 90.0, 180.0, 270.0)),
                            (95.0, (45.0, 135.0, 225.0, 315.0))):
        for az in azimuths:
            pol = polar * _DEG
            a = az * _DEG
            head_points.append(head_center + radius * np.array(
                [math.sin(pol) * math.cos(a), math.sin(pol) * math.sin(a), math.cos(pol)]
            ))

    e_n = np.cross(ez, neck_dir)
    e_n /= np.linalg.norm(e_n)
    isn = neck_base - 8.0 * e_n
    sns = neck_base + 8.0 * e_n

    fp = np.array([0.0, 0.0, 55.0])
    gt = np.array([0.0, 0.0, shaft_top])

    condyle_center = np.array([0.0, 0.0, 22.0])
    llc = condyle_center + np.array([-0.5 * width, 0.0, 0.0])
    mmc = condyle_center + np.array([0.5 * width, 0.0, 0.0])
    plc = np.array([-0.38 * width, -0.30 * width, 16.0])
    pmc = np.array([0.38 * width, -0.30 * width, 16.0])

    imc_target = np.array([0.25 * width, 6.0, 15.0])
    imc_dir = imc_target - sfh
    imc = sfh + length * imc_dir / np.linalg.norm(imc_dir)

    b = _Builder()
    shaft_radius = 4.0 + 0.14 * width
    _tube(b, np.array([0.0, 0.0, 28.0]), gt, shaft_radius, 36, 20)
    _tube(b, neck_base, head_center, 0.55 * radius, 10, 14)
    _ellipsoid(b, head_center, (radius, radius, radius), 16, 20)
    _ellipsoid(b, condyle_center, (0.5 * width, 0.33 * width, 16.0), 14, 20)
    _ellipsoid(b, gt + np.array([-10.0, 0.0, 0.0]), (14.0, 11.0, 12.0), 8, 12)

    landmark_positions = dict(zip(FEMUR_LANDMARKS, [
        *head_points, imc, mmc, pmc, llc, plc, isn, sns, fp, gt,
    ]))
    entries = {}
    for name in FEMUR_LANDMARKS:
        entries[name] = b.add_vertex(landmark_positions[name])
    mesh = b.build(FEMUR_TOPOLOGY)
    return mesh, LandmarkSet(FEMUR_TOPOLOGY, entries)


# ---------------------------------------------------------------------------
# scapula
# ---------------------------------------------------------------------------

def _rim_normal(version_deg: float, inclination_deg: float) -> np.ndarray:
    """Unit rim-plane normal realizing the requested version/inclination.

    In the canonical frame the blade lies in y=0 and the medial-lateral
    axis is +x.  The axial projection of the normal makes 90+version
    degrees with the axis and the in-blade projection 90+inclination.
    """
    ver = version_deg * _DEG
    inc = inclination_deg * _DEG
    a = -math.sin(ver)
    comp_b = math.cos(ver)
    if inc == 0.0:
        c = 0.0
    else:
        c = -a * math.cos(inc) / math.sin(inc)
    n = np.array([a, comp_b, c])
    return n / np.linalg.norm(n)


def make_scapula(params: ScapulaParams = ScapulaParams()) -> tuple[CorrespondedMesh, LandmarkSet]:
    """Build the stylized scapula and its 20 landmarks."""
    params.validate()
    sl = params.blade_length_mm
    gh = params.rim_height_mm
    rho = 0.5 * params.rim_diameter_mm
    csa = params.acromion_angle_deg * _DEG

    normal = _rim_normal(params.version_deg, params.inclination_deg)
    ez = np.array([0.0, 0.0, 1.0])
    e_sup = ez - (ez @ normal) * normal
    e_sup /= np.linalg.norm(e_sup)  # in-plane superior direction
    e_rad = np.cross(normal, e_sup)

    def rim_circle(theta_deg: float) -> np.ndarray:
        t = theta_deg * _DEG
        return rho * (math.sin(t) * e_rad + math.cos(t) * e_sup)

    gip = rim_circle(180.0)
    gs = gip + gh * e_sup
    igr = [rim_circle(th) for th in (100.0, 120.0, 140.0, 160.0,
                                     200.0, 220.0, 240.0, 260.0)]
    eta_gs = gh - rho  # apex height of the upper rim arc over the circle center
    rim_upper = []
    for k in range(1, 7):
        t = k * math.pi / 7.0
        rim_upper.append(rho * math.cos(t) * e_rad + eta_gs * math.sin(t) * e_sup)

    ts = np.array([-0.62 * sl, 0.0, 0.0])
    as_ = np.array([-0.55 * sl, 0.0, 0.30 * sl])
    ai_dir = np.array([-0.42 * sl, 0.0, -0.65 * sl]) - as_
    ai = as_ + sl * ai_dir / np.linalg.norm(ai_dir)

    # acromion: LA sits at exactly `csa` from the projected GIP->GS direction,
    # rotated about +y (the blade normal) toward lateral
    d1 = gs - gip
    d1p = d1 - d1[1] * np.array([0.0, 1.0, 0.0])
    d1p /= np.linalg.norm(d1p)
    rot = np.array([
        [math.cos(csa), 0.0, math.sin(csa)],
        [0.0, 1.0, 0.0],
        [-math.sin(csa), 0.0, math.cos(csa)],
    ])
    la = gip + (gh + 0.25 * sl) * (rot @ d1p) + np.array([0.0, 6.0, 0.0])

    b = _Builder()
    # blade: two thin sheets over the AS / glenoid-neck / AI / TS quad
    neck_pt = np.array([-10.0, 0.0, 4.0])
    nu, nv = 26, 16
    for side in (+1.25, -1.25):
        grid = np.empty((nu, nv, 3))
        for i in range(nu):
            u = i / (nu - 1)
            for j in range(nv):
                v = j / (nv - 1)
                p = ((1 - u) * (1 - v) * as_ + u * (1 - v) * neck_pt
                     + (1 - u) * v * ts + u * v * ai)
                grid[i, j] = p + np.array([0.0, side, 0.0])
        b.add_grid(grid)
    # glenoid dish: shallow cap over the rim circle
    rings, spokes = 8, 18
    grid = np.empty((rings, spokes, 3))
    for i in range(rings):
        r = rho * (i + 1) / rings
        depth = 3.0 * (1.0 - (r / rho) ** 2)
        for j in range(spokes):
            th = 2.0 * math.pi * j / spokes
            grid[i, j] = (r * (math.sin(th) * e_rad + math.cos(th) * e_sup)
                          - depth * normal)
    b.add_grid(grid, wrap=True)
    # spine ridge and acromion arm
    _tube(b, ts + np.array([0.0, 4.0, 2.0]), np.array([-0.18 * sl, 5.0, 0.22 * sl]),
          3.5, 8, 8)
    _tube(b, np.array([-0.30 * sl, 4.0, 0.24 * sl]), la, 4.0, 8, 8)

    landmark_positions = dict(zip(SCAPULA_LANDMARKS, [
        gs, gip, *igr, *rim_upper, ai, as_, ts, la,
    ]))
    entries = {}
    for name in SCAPULA_LANDMARKS:
        entries[name] = b.add_vertex(landmark_positions[name])
    mesh = b.build(SCAPULA_TOPOLOGY)
    return mesh, LandmarkSet(SCAPULA_TOPOLOGY, entries)


def make_fixture(params) -> tuple[CorrespondedMesh, LandmarkSet]:
    if isinstance(params, FemurParams):
        return make_femur(params)
    if isinstance(params, ScapulaParams):
        return make_scapula(params)
    raise DataError(f"unknown fixture parameter type {type(params).__name__}")


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

_FEMUR_FIELDS = ("length_cm", "head_diameter_mm", "neck_shaft_angle_deg",
                 "version_deg", "condylar_width_mm")
_SCAPULA_FIELDS = ("blade_length_mm", "rim_height_mm", "rim_diameter_mm",
                   "inclination_deg", "version_deg", "acromion_angle_deg")


def _corr_to_cov(sigmas: np.ndarray, corr: np.ndarray) -> np.ndarray:
    return corr * np.outer(sigmas, sigmas)


def default_femur_spec(n_samples: int = 30, seed: int = 0) -> "FixtureFamilySpec":
    """Size parameters strongly correlated, angles weakly, Table-like texture."""
    sigmas = np.array([2.2, 3.5, 4.0, 5.0, 5.0])
    corr = np.array([
        [1.00, 0.80, 0.15, 0.05, 0.75],
        [0.80, 1.00, 0.20, 0.05, 0.80],
        [0.15, 0.20, 1.00, 0.30, 0.10],
        [0.05, 0.05, 0.30, 1.00, 0.05],
        [0.75, 0.80, 0.10, 0.05, 1.00],
    ])
    return FixtureFamilySpec(
        kind="femur",
        mean=np.array([43.0, 52.0, 125.0, 14.0, 84.0]),
        covariance=_corr_to_cov(sigmas, corr),
        n_samples=n_samples,
        seed=seed,
    )


def default_scapula_spec(n_samples: int = 30, seed: int = 0) -> "FixtureFamilySpec":
    sigmas = np.array([9.0, 2.6, 2.0, 1.1, 0.9, 2.0])
    corr = np.array([
        [1.00, 0.70, 0.60, -0.15, -0.10, -0.35],
        [0.70, 1.00, 0.75, -0.20, -0.05, -0.40],
        [0.60, 0.75, 1.00, -0.10, -0.20, -0.35],
        [-0.15, -0.20, -0.10, 1.00, 0.20, 0.30],
        [-0.10, -0.05, -0.20, 0.20, 1.00, 0.30],
        [-0.35, -0.40, -0.35, 0.30, 0.30, 1.00],
    ])
    return FixtureFamilySpec(
        kind="scapula",
        mean=np.array([155.0, 36.0, 28.0, 8.0, 5.0, 33.0]),
        covariance=_corr_to_cov(sigmas, corr),
        n_samples=n_samples,
        seed=seed,
    )


@dataclass(frozen=True)
class FixtureFamilySpec:
    """Multivariate-normal generator over fixture parameters."""

    kind: str  # "femur" | "scapula"
    mean: np.ndarray
    covariance: np.ndarray
    n_samples: int
    seed: int = 0

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        if self.kind not in ("femur", "scapula"):
            raise DataError(f"unknown fixture kind {self.kind!r}")
        m = len(self.param_fields)
        if mean.shape != (m,) or cov.shape != (m, m):
            raise DataError(f"{self.kind} family needs mean ({m},) and covariance ({m},{m})")
        if not np.allclose(cov, cov.T):
            raise DataError("covariance must be symmetric")
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise DataError("covariance must be positive definite")
        if self.n_samples < 1:
            raise DataError("n_samples must be >= 1")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def param_fields(self) -> tuple[str, ...]:
        return _FEMUR_FIELDS if self.kind == "femur" else _SCAPULA_FIELDS

    @property
    def measurement_labels(self) -> tuple[str, ...]:
        return FEMUR_LABELS if self.kind == "femur" else SCAPULA_LABELS

    def make_params(self, values: np.ndarray):
        kwargs = dict(zip(self.param_fields, (float(v) for v in values)))
        return FemurParams(**kwargs) if self.kind == "femur" else ScapulaParams(**kwargs)


@dataclass(frozen=True)
class FixtureFamily:
    """Sampled dataset plus the generating ground-truth parameter table."""

    spec: FixtureFamilySpec
    dataset: ShapeDataset
    landmarks: LandmarkSet
    params: list = field(default_factory=list)
    n_rejected: int = 0

    def ground_truth(self) -> list[dict[str, float]]:
        return [p.as_measurements() for p in self.params]


def sample_family(spec: FixtureFamilySpec, log=None) -> FixtureFamily:
    """Draw fixture parameters from the family normal and build the meshes.

    Draws violating fixture validity (non-positive lengths, rim shape,
    tilt sign coupling) are rejected and redrawn; the count is reported.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=spec.seed))
    chol = np.linalg.cholesky(spec.covariance)
    params_list = []
    rejected = 0
    while len(params_list) < spec.n_samples:
        draw = spec.mean + chol @ rng.standard_normal(len(spec.mean))
        try:
            p = spec.make_params(draw)
            p.validate()
        except DataError:
            rejected += 1
            if rejected > 100 * spec.n_samples:
                raise DataError(
                    "fixture family rejects nearly every draw; "
                    "check the mean/covariance settings"
                )
            continue
        params_list.append(p)
    if rejected and log is not None:
        log(f"fixture family rejected {rejected} draws")
    meshes = []
    landmarks = None
    for p in params_list:
        mesh, lm = make_fixture(p)
        meshes.append(mesh)
        landmarks = lm
    return FixtureFamily(spec, ShapeDataset(meshes), landmarks, params_list, rejected)


def spec_from_dict(doc: dict) -> FixtureFamilySpec:
    try:
        return FixtureFamilySpec(
            kind=str(doc["kind"]),
            mean=np.asarray(doc["mean"], dtype=float),
            covariance=np.asarray(doc["covariance"], dtype=float),
            n_samples=int(doc["n_samples"]),
            seed=int(doc.get("seed", 0)),
        )
    except KeyError as exc:
        raise DataError(f"fixture spec missing key {exc}") from exc


def spec_to_dict(spec: FixtureFamilySpec) -> dict:
    return {
        "kind": spec.kind,
        "mean": spec.mean,
        "covariance": spec.covariance,
        "n_samples": spec.n_samples,
        "seed": spec.seed,
    }
