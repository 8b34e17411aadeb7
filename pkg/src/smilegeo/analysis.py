"""Curve diagnostics: curvature profiles and density divergences.

Curvatures are computed after resampling the curve to uniform arc length
(cubic interpolation on the chord-length parameter) with 5-point central
difference stencils:

    kappa_E = (x' y'' - y' x'') / (x'^2 + y'^2)^{3/2}
    kappa_s = 3 (x' x'' + y' y'') / (x' y'' - y' x'')
              - (x' y''' - y' x''') (x'^2 + y'^2) / (x' y'' - y' x'')^2

kappa_E is invariant under rotations and translations and equals 1/rho on a
circle of radius rho; kappa_s is additionally invariant under uniform
scaling and vanishes identically on circles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.special import ndtr

from .distributions import DensityCurve
from .errors import CurveTooShort, DegenerateMass, DisjointSupport
from .georep import RepresentationCurve
from .shapes import CircleShape

CURVATURE_RESAMPLE_N = 2001
CURVATURE_DENOM_TOL = 1e-12
CURVATURE_EDGE_TRIM = 4  # extra points dropped beyond the stencil margin
MIN_POINTS_EUCLIDEAN = 7
MIN_POINTS_SIMILARITY = 9
KL_GRID_N = 4001
KL_CLAMP_FLOOR = 1e-50
BEST_LOGNORMAL_MIN_MASS = 0.99


@dataclass(frozen=True)
class CurvatureProfile:
    """Curvatures along a resampled curve, with two reporting abscissas.

    Entries where the curvature denominator falls below tolerance are NaN.
    ``angle_about_center`` is the polar angle about a fitted circle's centre
    (about the origin when no circle is given); ``n_minus_d1`` is available
    when the curve carries market context.
    """

    arc: np.ndarray
    x: np.ndarray
    y: np.ndarray
    kappa_e: np.ndarray
    kappa_s: np.ndarray
    angle_about_center: np.ndarray
    n_minus_d1: np.ndarray | None = None
    strikes: np.ndarray | None = None


def _curve_points(curve) -> np.ndarray:
    if isinstance(curve, RepresentationCurve):
        return curve.points
    pts = np.asarray(curve, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("curve must be an (n, 2) point array or a RepresentationCurve")
    return pts


def _resample_uniform_arclength(pts: np.ndarray, n: int):
    """Uniform-arc-length resampling via chord-length cubic interpolation."""
    seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
    if np.any(seg == 0.0):
        keep = np.concatenate([[True], seg > 0.0])
        pts = pts[keep]
        seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    s_uniform = np.linspace(0.0, float(s[-1]), n)
    x = CubicSpline(s, pts[:, 0])(s_uniform)
    y = CubicSpline(s, pts[:, 1])(s_uniform)
    return s, s_uniform, x, y


def _stencil(f: np.ndarray, h: float):
    """5-point first, second, third derivatives on the interior."""
    d1 = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    d2 = (-f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]) / (12.0 * h * h)
    d3 = (-f[:-4] + 2.0 * f[1:-3] - 2.0 * f[3:-1] + f[4:]) / (2.0 * h**3)
    return d1, d2, d3


def _curvatures(pts: np.ndarray, resample_n: int):
    _, s_uniform, x, y = _resample_uniform_arclength(pts, resample_n)
    h = float(s_uniform[1] - s_uniform[0])
    x1, x2, x3 = _stencil(x, h)
    y1, y2, y3 = _stencil(y, h)
    cross = x1 * y2 - y1 * x2
    speed2 = x1 * x1 + y1 * y1
    bad = np.abs(cross) <= CURVATURE_DENOM_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa_e = cross / speed2**1.5
        kappa_s = 3.0 * (x1 * x2 + y1 * y2) / cross - (x1 * y3 - y1 * x3) * speed2 / (
            cross * cross
        )
    kappa_e = np.where(bad, np.nan, kappa_e)
    kappa_s = np.where(bad, np.nan, kappa_s)
    # Drop a few more points at each end: the resampling spline's first and
    # last cells feed the outermost stencils with lower-order accuracy.
    t = CURVATURE_EDGE_TRIM
    sl = slice(2 + t, -(2 + t))
    return s_uniform[sl], x[sl], y[sl], kappa_e[t:-t], kappa_s[t:-t]


def euclidean_curvature(curve, resample_n: int = CURVATURE_RESAMPLE_N) -> np.ndarray:
    """kappa_E at the interior resampled points (NaN where masked)."""
    pts = _curve_points(curve)
    if len(pts) < MIN_POINTS_EUCLIDEAN or resample_n < MIN_POINTS_EUCLIDEAN:
        raise CurveTooShort(f"need at least {MIN_POINTS_EUCLIDEAN} points")
    return _curvatures(pts, resample_n)[3]


def similarity_curvature(curve, resample_n: int = CURVATURE_RESAMPLE_N) -> np.ndarray:
    """kappa_s at the interior resampled points (NaN where masked)."""
    pts = _curve_points(curve)
    if len(pts) < MIN_POINTS_SIMILARITY or resample_n < MIN_POINTS_SIMILARITY:
        raise CurveTooShort(f"need at least {MIN_POINTS_SIMILARITY} points")
    return _curvatures(pts, resample_n)[4]


def curvature_profile(
    curve,
    resample_n: int = CURVATURE_RESAMPLE_N,
    circle: CircleShape | None = None,
) -> CurvatureProfile:
    """Both curvatures against two reporting abscissas.

    The profile carries the polar angle about the fitted circle's centre
    (unwrapped, so it plots continuously) and, when the input is a
    RepresentationCurve, N(-d1) of the underlying smile.
    """
    pts = _curve_points(curve)
    if len(pts) < MIN_POINTS_SIMILARITY or resample_n < MIN_POINTS_SIMILARITY:
        raise CurveTooShort(f"need at least {MIN_POINTS_SIMILARITY} points")
    arc, x, y, kappa_e, kappa_s = _curvatures(pts, resample_n)
    cx, cy = circle.center if circle is not None else (0.0, 0.0)
    angle = np.unwrap(np.arctan2(y - cy, x - cx))

    n_minus_d1 = None
    strikes = None
    if isinstance(curve, RepresentationCurve):
        seg = np.hypot(np.diff(curve.points[:, 0]), np.diff(curve.points[:, 1]))
        s_nodes = np.concatenate([[0.0], np.cumsum(seg)])
        lnk = PchipInterpolator(s_nodes, np.log(curve.strikes))(arc)
        strikes = np.exp(lnk)
        ctx = curve.context
        ms = ctx.market
        # sigma along the resampled curve from the radial coordinate
        sigma = np.hypot(x, y) - ctx.radius_scale
        total = sigma * math.sqrt(ms.tenor)
        d1 = (
            np.log(ms.spot / strikes) + (ms.dom_rate - ms.for_rate) * ms.tenor
        ) / total + 0.5 * total
        n_minus_d1 = ndtr(-d1)
    return CurvatureProfile(
        arc=arc,
        x=x,
        y=y,
        kappa_e=kappa_e,
        kappa_s=kappa_s,
        angle_about_center=angle,
        n_minus_d1=n_minus_d1,
        strikes=strikes,
    )


@dataclass(frozen=True)
class DivergenceReport:
    """Trapezoid-rule KL divergence in nats on a shared strike window."""

    kl_nats: float
    clamped_fraction: float
    grid: np.ndarray

    @property
    def pseudo(self) -> bool:
        """True when the q side needed clamping (negative or zero densities)."""
        return self.clamped_fraction > 0.0


def kl_divergence(
    p: DensityCurve,
    q: DensityCurve,
    n: int = KL_GRID_N,
    clamp_floor: float = KL_CLAMP_FLOOR,
) -> DivergenceReport:
    """KL(p || q) over the overlap of the two strike windows.

    Both curves are re-sampled to a log-uniform grid and rescaled to unit
    trapezoid mass there, which keeps the discrete divergence non-negative
    and zero exactly for identical curves.  q values at or below the clamp
    floor are raised to it (the pseudo-divergence of ill-posed inversions)
    and flagged through ``clamped_fraction``.
    """
    if np.any(p.values < 0.0):
        raise ValueError("p must be a non-negative density")
    lo = max(float(p.strikes[0]), float(q.strikes[0]))
    hi = min(float(p.strikes[-1]), float(q.strikes[-1]))
    if not lo < hi:
        raise DisjointSupport(f"no strike overlap: [{lo:.6g}, {hi:.6g}]")
    grid = np.exp(np.linspace(math.log(lo), math.log(hi), n))
    p_vals = np.interp(grid, p.strikes, p.values)
    q_vals = np.interp(grid, q.strikes, q.values)
    clamped = q_vals <= clamp_floor
    q_vals = np.where(clamped, clamp_floor, q_vals)

    # Trapezoid weights; discrete renormalisation keeps Gibbs' inequality exact.
    w = np.empty_like(grid)
    w[0] = 0.5 * (grid[1] - grid[0])
    w[-1] = 0.5 * (grid[-1] - grid[-2])
    w[1:-1] = 0.5 * (grid[2:] - grid[:-2])
    p_norm = p_vals / float(np.sum(w * p_vals))
    q_norm = q_vals / float(np.sum(w * q_vals))
    ratio = np.where(p_norm > 0.0, p_norm / np.where(q_norm > 0.0, q_norm, 1.0), 1.0)
    kl = float(np.sum(w * np.where(p_norm > 0.0, p_norm * np.log(ratio), 0.0)))
    return DivergenceReport(
        kl_nats=kl,
        clamped_fraction=float(np.mean(clamped)),
        grid=grid,
    )


def best_lognormal(p: DensityCurve):
    """The KL-optimal log-normal fit to a density on the positive axis.

    The optimum is in closed form: mu* and s*^2 are the mean and variance of
    ln X under p.
    """
    from .distributions import LogNormal

    if float(p.strikes[0]) <= 0.0:
        raise ValueError("density must be supported on positive strikes")
    if np.any(p.values < 0.0):
        raise ValueError("p must be a non-negative density")
    w = np.empty_like(p.strikes)
    w[0] = 0.5 * (p.strikes[1] - p.strikes[0])
    w[-1] = 0.5 * (p.strikes[-1] - p.strikes[-2])
    w[1:-1] = 0.5 * (p.strikes[2:] - p.strikes[:-2])
    mass = float(np.sum(w * p.values))
    if mass < BEST_LOGNORMAL_MIN_MASS:
        raise DegenerateMass(
            f"grid carries mass {mass:.4f} < {BEST_LOGNORMAL_MIN_MASS}; widen the grid"
        )
    lnx = np.log(p.strikes)
    mu = float(np.sum(w * p.values * lnx)) / mass
    var = float(np.sum(w * p.values * lnx * lnx)) / mass - mu * mu
    return LogNormal(mu=mu, s=math.sqrt(var))
