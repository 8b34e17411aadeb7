"""Circles and conics: exact interpolation through 3 and 5 points.

Pure plane geometry, no market context.  The circle transform (scale plus
two translations) is the three-number group action connecting shapes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CollinearPoints, DegenerateConfiguration, NotAnEllipse

COLLINEARITY_TOL = 1e-12
CONIC_RANK_TOL = 1e-10


@dataclass(frozen=True)
class CircleShape:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not (self.radius > 0.0 and np.isfinite(self.radius)):
            raise ValueError("radius must be positive and finite")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @property
    def contains_origin(self) -> bool:
        """Whether every ray from the origin cuts the circle exactly once."""
        cx, cy = self.center
        return cx * cx + cy * cy < self.radius * self.radius


@dataclass(frozen=True)
class ConicShape:
    """Ax^2 + Bxy + Cy^2 + Dx + Ey + F = 0, unit-norm coefficients.

    Normalised so the coefficient vector has unit Euclidean norm and its
    first nonzero entry is positive; restricted to ellipses.
    """

    coefficients: tuple[float, float, float, float, float, float]

    def __post_init__(self):
        coefs = np.asarray(self.coefficients, dtype=float)
        norm = float(np.linalg.norm(coefs))
        if norm == 0.0 or not np.all(np.isfinite(coefs)):
            raise ValueError("conic coefficients must be finite and not all zero")
        coefs = coefs / norm
        lead = coefs[np.nonzero(np.abs(coefs) > 1e-14)[0][0]]
        if lead < 0.0:
            coefs = -coefs
        a, b, c = coefs[0], coefs[1], coefs[2]
        if b * b - 4.0 * a * c >= 0.0:
            raise NotAnEllipse(f"discriminant {b * b - 4.0 * a * c:.6g} >= 0")
        object.__setattr__(self, "coefficients", tuple(float(v) for v in coefs))

    def evaluate(self, x, y):
        """Value of the conic polynomial at (x, y)."""
        a, b, c, d, e, f = self.coefficients
        return a * x * x + b * x * y + c * y * y + d * x + e * y + f


def _as_point(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape != (2,):
        raise ValueError("points must be (x, y) pairs")
    return arr


def circumcircle(p1, p2, p3) -> CircleShape:
    """The unique circle through three non-collinear points.

    Solved from the perpendicular-bisector 2x2 linear system; exact
    interpolation up to rounding.
    """
    a, b, c = _as_point(p1), _as_point(p2), _as_point(p3)
    cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    scale2 = max(
        float(np.dot(b - a, b - a)), float(np.dot(c - a, c - a)), float(np.dot(c - b, c - b))
    )
    if abs(cross) <= 2.0 * COLLINEARITY_TOL * scale2 or scale2 == 0.0:
        raise CollinearPoints("points are collinear or coincident")
    lhs = np.array([[b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]])
    rhs = 0.5 * np.array([np.dot(b, b) - np.dot(a, a), np.dot(c, c) - np.dot(a, a)])
    center = np.linalg.solve(lhs, rhs)
    radius = float(np.hypot(*(a - center)))
    return CircleShape(center=(float(center[0]), float(center[1])), radius=radius)


def _any_triple_collinear(pts: np.ndarray) -> bool:
    n = len(pts)
    scale2 = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            scale2 = max(scale2, float(np.dot(pts[i] - pts[j], pts[i] - pts[j])))
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                cross = (pts[j][0] - pts[i][0]) * (pts[k][1] - pts[i][1]) - (
                    pts[j][1] - pts[i][1]
                ) * (pts[k][0] - pts[i][0])
                if abs(cross) <= 2.0 * COLLINEARITY_TOL * scale2:
                    return True
    return False


def conic_through_5(points) -> ConicShape:
    """The unique conic through five points in general position.

    Taken as the smallest-singular-value direction of the 5x6 design matrix
    (a full orthogonal decomposition), which is deterministic and
    rank-revealing.
    """
    pts = np.asarray([_as_point(p) for p in points], dtype=float)
    if pts.shape != (5, 2):
        raise ValueError("exactly five points are required")
    if _any_triple_collinear(pts):
        raise DegenerateConfiguration("three of the five points are collinear")
    x, y = pts[:, 0], pts[:, 1]
    design = np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])
    _, sv, vt = np.linalg.svd(design)
    if sv[4] <= CONIC_RANK_TOL * sv[0]:
        raise DegenerateConfiguration("design matrix rank below 5")
    return ConicShape(coefficients=tuple(vt[-1]))


def transform_circle(c: CircleShape, scale: float, dx: float, dy: float) -> CircleShape:
    """Scale about the origin then translate: the three-number map between circles."""
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    return CircleShape(
        center=(scale * c.center[0] + dx, scale * c.center[1] + dy),
        radius=scale * c.radius,
    )


def circle_between(src: CircleShape, dst: CircleShape) -> tuple[float, float, float]:
    """The unique (scale, dx, dy) with transform_circle(src, *result) == dst."""
    scale = dst.radius / src.radius
    return (
        scale,
        dst.center[0] - scale * src.center[0],
        dst.center[1] - scale * src.center[1],
    )
