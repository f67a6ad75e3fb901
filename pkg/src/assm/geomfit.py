"""Least-squares geometric primitives used by the measurement recipes.

All fits are closed-form: algebraic sphere fit via linearized normal
equations, total-least-squares plane via SVD, and the algebraic (Kasa)
circle fit after projecting points into their best plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, DimensionError


def _as_points(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 3:
        raise DimensionError(f"expected (n, 3) points, got {p.shape}")
    return p


@dataclass(frozen=True)
class SphereFit:
    center: np.ndarray
    radius: float
    rms_residual: float


@dataclass(frozen=True)
class PlaneFit:
    point: np.ndarray
    normal: np.ndarray
    rms_residual: float


@dataclass(frozen=True)
class CircleFit3D:
    center: np.ndarray
    radius: float
    plane: PlaneFit


def fit_sphere(points) -> SphereFit:
    """Algebraic least-squares sphere through >= 4 non-coplanar points.

    Solves ||p||^2 = 2 c . p + (r^2 - ||c||^2) as a linear system.
    """
    p = _as_points(points)
    if p.shape[0] < 4:
        raise DegenerateGeometryError(f"sphere fit needs >= 4 points, got {p.shape[0]}")
    # solve in centroid-centered coordinates: the algebraic fit is
    # translation-equivariant and this keeps the system well conditioned
    origin = p.mean(axis=0)
    q = p - origin
    sv = np.linalg.svd(q, compute_uv=False)
    if sv[2] < 1e-9 * max(sv[0], 1.0):
        raise DegenerateGeometryError("sphere fit is degenerate: points are coplanar")
    a = np.hstack([2.0 * q, np.ones((q.shape[0], 1))])
    b = (q**2).sum(axis=1)
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    r2 = x[3] + x[:3] @ x[:3]
    if r2 <= 0:
        raise DegenerateGeometryError("sphere fit produced a non-positive radius")
    center = x[:3] + origin
    radius = math.sqrt(r2)
    residual = np.linalg.norm(p - center, axis=1) - radius
    return SphereFit(center, radius, float(np.sqrt(np.mean(residual**2))))


def fit_plane(points) -> PlaneFit:
    """Total-least-squares plane through the centroid of >= 3 points.

    The normal is the direction of smallest variance, with its sign fixed
    so the largest-magnitude component is positive.
    """
    p = _as_points(points)
    if p.shape[0] < 3:
        raise DegenerateGeometryError(f"plane fit needs >= 3 points, got {p.shape[0]}")
    centroid = p.mean(axis=0)
    _, sv, vt = np.linalg.svd(p - centroid)
    if sv[1] < 1e-9 * max(sv[0], 1.0):
        raise DegenerateGeometryError("plane fit is degenerate: points are collinear")
    normal = vt[2]
    k = int(np.argmax(np.abs(normal)))
    if normal[k] < 0:
        normal = -normal
    rms = sv[2] / math.sqrt(p.shape[0]) if len(sv) > 2 else 0.0
    return PlaneFit(centroid, normal, float(rms))


def plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal in-plane basis (e1, e2) for a unit normal."""
    n = np.asarray(normal, dtype=float)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) <= 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def fit_circle_2d(xy: np.ndarray) -> tuple[np.ndarray, float]:
    """Kasa algebraic circle fit in the plane: returns (center, radius)."""
    if xy.shape[0] < 3:
        raise DegenerateGeometryError(f"circle fit needs >= 3 points, got {xy.shape[0]}")
    origin = xy.mean(axis=0)
    q = xy - origin
    sv = np.linalg.svd(q, compute_uv=False)
    if sv[1] < 1e-9 * max(sv[0], 1.0):
        raise DegenerateGeometryError("circle fit is degenerate: points are collinear")
    a = np.hstack([2.0 * q, np.ones((q.shape[0], 1))])
    b = (q**2).sum(axis=1)
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    r2 = x[2] + x[:2] @ x[:2]
    if r2 <= 0:
        raise DegenerateGeometryError("circle fit produced a non-positive radius")
    return x[:2] + origin, math.sqrt(r2)


def fit_circle3d(points) -> CircleFit3D:
    """Plane-project points, fit a 2D circle, lift the center back to 3D."""
    p = _as_points(points)
    plane = fit_plane(p)
    e1, e2 = plane_basis(plane.normal)
    rel = p - plane.point
    xy = np.stack([rel @ e1, rel @ e2], axis=1)
    center2d, radius = fit_circle_2d(xy)
    center = plane.point + center2d[0] * e1 + center2d[1] * e2
    return CircleFit3D(center, radius, plane)


def angle_deg(u, v) -> float:
    """Unsigned angle between two vectors in degrees, in [0, 180]."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateGeometryError("angle of a zero vector is undefined")
    c = float(np.dot(u, v) / (nu * nv))
    return math.degrees(math.acos(max(-1.0, min(1.0, c))))


def project_onto_plane(v, normal) -> np.ndarray:
    """Remove the component of v along a unit normal."""
    v = np.asarray(v, dtype=float)
    n = np.asarray(normal, dtype=float)
    return v - (v @ n) * n
