"""Polar-plane representation of smiles and its inversion.

A strike maps to an angle through a stereographic slice of the unit circle:
X(K) = ln(K / K_atm) / R lands on the circle at (2X/(1+X^2), (X^2-1)/(1+X^2)),
whose polar angle runs monotonically from -pi/2 at X = 0.  The radial
coordinate is R + sigma(K), so a flat smile draws an origin-centred circle of
radius R + sigma.  Inverting a fitted shape intersects each strike's ray with
the shape and reads sigma back off the radial excess over R.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bsm import MarketState, atm_rn_lognormal, strike_for_target_nd1
from .errors import NonpositiveVol, OriginOutsideShape
from .shapes import CircleShape, ConicShape
from .smile import DeltaConvention, SmileCurve, atm_rn_strike, strike_for_delta

DEFAULT_CURVE_POINTS = 2001


@dataclass(frozen=True)
class RepresentationConfig:
    """Choice of the radial scale R, the method's one free parameter.

    ``radius_scale=None`` resolves R automatically: the strikes at the
    [window_lo, window_hi] N(-d1) window map to X = -/+ unit_fraction,
    symmetrised by the larger log-distance from the centre strike.
    """

    radius_scale: float | None = None
    window_lo: float = 0.01
    window_hi: float = 0.99
    unit_fraction: float = 0.95

    def __post_init__(self):
        if self.radius_scale is not None and self.radius_scale <= 0.0:
            raise ValueError("radius_scale must be positive")
        if not 0.0 < self.window_lo < self.window_hi < 1.0:
            raise ValueError("need 0 < window_lo < window_hi < 1")
        if not 0.0 < self.unit_fraction <= 1.0:
            raise ValueError("unit_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class ReprContext:
    """Resolved representation context: market, centre strike, and R."""

    market: MarketState
    atm_rn: float
    radius_scale: float

    def __post_init__(self):
        if self.atm_rn <= 0.0 or self.radius_scale <= 0.0:
            raise ValueError("atm_rn and radius_scale must be positive")


@dataclass(frozen=True)
class RepresentationCurve:
    """Sampled polar curve {rho cos(phi), rho sin(phi)} for one smile."""

    strikes: np.ndarray
    angles: np.ndarray
    radii: np.ndarray
    points: np.ndarray
    context: ReprContext

    def __post_init__(self):
        strikes = np.asarray(self.strikes, dtype=float)
        angles = np.asarray(self.angles, dtype=float)
        radii = np.asarray(self.radii, dtype=float)
        points = np.asarray(self.points, dtype=float)
        if np.any(np.diff(strikes) <= 0.0):
            raise ValueError("strikes must be strictly increasing")
        if np.any(np.diff(angles) <= 0.0):
            raise ValueError("angles must be strictly increasing in ln K")
        if np.any(radii <= 0.0):
            raise ValueError("radii must be positive")
        if points.shape != (strikes.size, 2):
            raise ValueError("points must be an (n, 2) array")
        for name, arr in (("strikes", strikes), ("angles", angles), ("radii", radii), ("points", points)):
            object.__setattr__(self, name, arr)

    @property
    def vols(self) -> np.ndarray:
        """sigma(K) read back from the radial coordinate."""
        return self.radii - self.context.radius_scale


def strike_to_x(strike, atm_rn: float, radius_scale: float):
    """X(K) = ln(K / atm_rn) / R, the stereographic abscissa of a strike."""
    if atm_rn <= 0.0 or radius_scale <= 0.0:
        raise ValueError("atm_rn and radius_scale must be positive")
    strike = np.asarray(strike, dtype=float)
    if np.any(strike <= 0.0):
        raise ValueError("strike must be positive")
    out = np.log(strike / atm_rn) / radius_scale
    return float(out) if np.ndim(out) == 0 else out


def stereographic_point(x_coord):
    """Point of the unit circle projecting to X: (2X, X^2 - 1) / (1 + X^2)."""
    x_coord = np.asarray(x_coord, dtype=float)
    denom = 1.0 + x_coord * x_coord
    px = 2.0 * x_coord / denom
    pz = (x_coord * x_coord - 1.0) / denom
    if px.ndim == 0:
        return float(px), float(pz)
    return px, pz


def polar_angle(x, z):
    """Principal polar angle of (x, z) in (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any((x == 0.0) & (z == 0.0)):
        raise ValueError("polar angle undefined at the origin")
    out = np.arctan2(z, x)
    out = np.where((out == -math.pi), math.pi, out)
    return float(out) if np.ndim(out) == 0 else out


def continuous_angle(x_coord):
    """Monotone angle branch along the projected line: 2 arctan(X) - pi/2.

    Equals the principal polar angle modulo 2 pi, starts at -pi/2 for X = 0,
    and avoids the arctan2 branch cut that the image crosses at X = -1.
    """
    x_coord = np.asarray(x_coord, dtype=float)
    out = 2.0 * np.arctan(x_coord) - 0.5 * math.pi
    return float(out) if np.ndim(out) == 0 else out


def angle_for_strike(strike, ctx: ReprContext):
    return continuous_angle(strike_to_x(strike, ctx.atm_rn, ctx.radius_scale))


def context_for_smile(
    smile: SmileCurve,
    cfg: RepresentationConfig | None = None,
    atm_rn: float | None = None,
) -> ReprContext:
    """Resolve (atm_rn, R) for a smile.

    The centre strike defaults to the smile's delta-neutral strike; auto R
    places the smile's own [window_lo, window_hi] delta window just inside
    the unit circle.
    """
    cfg = cfg or RepresentationConfig()
    if atm_rn is None:
        atm_rn = atm_rn_strike(smile)
    if cfg.radius_scale is not None:
        return ReprContext(market=smile.market, atm_rn=atm_rn, radius_scale=cfg.radius_scale)
    k_lo = strike_for_delta(smile, cfg.window_lo, DeltaConvention.FORWARD_N).strike
    k_hi = strike_for_delta(smile, cfg.window_hi, DeltaConvention.FORWARD_N).strike
    half_width = max(abs(math.log(k_lo / atm_rn)), abs(math.log(k_hi / atm_rn)))
    return ReprContext(
        market=smile.market, atm_rn=atm_rn, radius_scale=half_width / cfg.unit_fraction
    )


def flat_context(
    ms: MarketState, atm_vol: float, cfg: RepresentationConfig | None = None
) -> ReprContext:
    """Context from a single at-the-money vol (three-quote market rows).

    Uses the flat-vol proxy: the delta window of a constant-vol smile is
    symmetric about its delta-neutral strike in log-strike.
    """
    cfg = cfg or RepresentationConfig()
    atm = atm_rn_lognormal(ms, atm_vol)
    if cfg.radius_scale is not None:
        return ReprContext(market=ms, atm_rn=atm, radius_scale=cfg.radius_scale)
    k_hi = strike_for_target_nd1(ms, atm_vol, cfg.window_hi)
    k_lo = strike_for_target_nd1(ms, atm_vol, cfg.window_lo)
    half_width = max(abs(math.log(k_hi / atm)), abs(math.log(k_lo / atm)))
    return ReprContext(market=ms, atm_rn=atm, radius_scale=half_width / cfg.unit_fraction)


def represent(
    smile: SmileCurve,
    ctx: ReprContext | RepresentationConfig | None = None,
    strikes=None,
) -> RepresentationCurve:
    """Map a smile to its polar-plane curve.

    Flat smiles land on an origin-centred circle of radius R + sigma; the
    angle grid is strictly monotone in ln K.
    """
    if not isinstance(ctx, ReprContext):
        ctx = context_for_smile(smile, ctx)
    if strikes is None:
        strikes = smile.default_grid(DEFAULT_CURVE_POINTS)
    strikes = np.asarray(strikes, dtype=float)
    angles = angle_for_strike(strikes, ctx)
    radii = ctx.radius_scale + np.asarray(smile.vol(strikes), dtype=float)
    points = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    return RepresentationCurve(
        strikes=strikes, angles=angles, radii=radii, points=points, context=ctx
    )


def represent_anchors(anchors, ctx: ReprContext) -> np.ndarray:
    """Representation points of delta anchors: rows of (x, y)."""
    out = np.empty((len(anchors), 2), dtype=float)
    for i, anchor in enumerate(anchors):
        phi = angle_for_strike(anchor.strike, ctx)
        rho = ctx.radius_scale + anchor.vol
        out[i] = (rho * math.cos(phi), rho * math.sin(phi))
    return out


def _circle_ray_radius(shape: CircleShape, phi):
    """Distance from the origin to the circle along the ray at angle phi."""
    cx, cy = shape.center
    proj = cx * np.cos(phi) + cy * np.sin(phi)
    disc = proj * proj - (cx * cx + cy * cy) + shape.radius * shape.radius
    return proj + np.sqrt(disc)


def _conic_ray_coeffs(shape: ConicShape, phi):
    a, b, c, d, e, _f = shape.coefficients
    cos, sin = np.cos(phi), np.sin(phi)
    quad = a * cos * cos + b * cos * sin + c * sin * sin
    lin = d * cos + e * sin
    return quad, lin


def _conic_ray_radius(shape: ConicShape, phi):
    a, b, c, d, e, f = shape.coefficients
    if f >= 0.0:
        # Ellipse value at the origin shares the sign of the outside region.
        raise OriginOutsideShape("origin not strictly inside the ellipse")
    quad, lin = _conic_ray_coeffs(shape, phi)
    disc = lin * lin - 4.0 * quad * f
    return (-lin + np.sqrt(disc)) / (2.0 * quad)


def shape_ray_radius(shape, phi):
    """rho(phi): the unique positive ray-shape intersection distance."""
    if isinstance(shape, CircleShape):
        if not shape.contains_origin:
            raise OriginOutsideShape(
                "circle does not enclose the origin; rays miss it or cut it twice"
            )
        return _circle_ray_radius(shape, phi)
    if isinstance(shape, ConicShape):
        return _conic_ray_radius(shape, phi)
    raise TypeError(f"unsupported shape {type(shape).__name__}")


def _circle_rho_derivs(shape: CircleShape, phi):
    """(rho, d rho/d phi, d^2 rho/d phi^2) for a circle."""
    cx, cy = shape.center
    cos, sin = np.cos(phi), np.sin(phi)
    g = cx * cos + cy * sin
    g_hat = -cx * sin + cy * cos
    s = np.sqrt(g * g - (cx * cx + cy * cy) + shape.radius * shape.radius)
    rho = g + s
    d1 = g_hat * (1.0 + g / s)
    d2 = -g + (g_hat * g_hat - g * g) / s - g * g * g_hat * g_hat / s**3
    return rho, d1, d2


def _conic_rho_derivs(shape: ConicShape, phi):
    a, b, c, d, e, _f = shape.coefficients
    cos, sin = np.cos(phi), np.sin(phi)
    quad, lin = _conic_ray_coeffs(shape, phi)
    quad_p = (c - a) * 2.0 * sin * cos + b * (cos * cos - sin * sin)
    quad_pp = 2.0 * (c - a) * (cos * cos - sin * sin) - 4.0 * b * sin * cos
    lin_p = -d * sin + e * cos
    rho = _conic_ray_radius(shape, phi)
    slope = 2.0 * quad * rho + lin
    d1 = -(quad_p * rho * rho + lin_p * rho) / slope
    d2 = -(
        quad_pp * rho * rho
        + 4.0 * quad_p * rho * d1
        + 2.0 * quad * d1 * d1
        - lin * rho
        + 2.0 * lin_p * d1
    ) / slope
    return rho, d1, d2


def smile_from_shape(
    shape,
    ctx: ReprContext,
    k_lo: float | None = None,
    k_hi: float | None = None,
    grid=None,
    validate_n: int = 513,
) -> SmileCurve:
    """Invert a fitted shape back into a smile.

    sigma(K) is the radial excess over R of the ray-shape intersection at the
    strike's angle.  The whole requested domain is swept for admissibility:
    the origin must sit strictly inside the shape and the implied vol must be
    positive everywhere.
    """
    if grid is not None:
        grid = np.asarray(grid, dtype=float)
        k_lo = float(grid.min()) if k_lo is None else k_lo
        k_hi = float(grid.max()) if k_hi is None else k_hi
    if k_lo is None or k_hi is None:
        raise ValueError("either a grid or explicit [k_lo, k_hi] is required")

    if isinstance(shape, CircleShape):
        rho_derivs = lambda phi: _circle_rho_derivs(shape, phi)
    elif isinstance(shape, ConicShape):
        rho_derivs = lambda phi: _conic_rho_derivs(shape, phi)
    else:
        raise TypeError(f"unsupported shape {type(shape).__name__}")

    r_scale = ctx.radius_scale
    ln_atm = math.log(ctx.atm_rn)

    def angle(lnk):
        x = (np.asarray(lnk, dtype=float) - ln_atm) / r_scale
        dphi = 2.0 / ((1.0 + x * x) * r_scale)
        d2phi = -4.0 * x / ((1.0 + x * x) ** 2 * r_scale * r_scale)
        return 2.0 * np.arctan(x) - 0.5 * math.pi, dphi, d2phi

    def vol_fn(lnk):
        phi, _, _ = angle(lnk)
        return shape_ray_radius(shape, phi) - r_scale

    def dvol_fn(lnk):
        phi, dphi, _ = angle(lnk)
        _, drho, _ = rho_derivs(phi)
        return drho * dphi

    def d2vol_fn(lnk):
        phi, dphi, d2phi = angle(lnk)
        _, drho, d2rho = rho_derivs(phi)
        return d2rho * dphi * dphi + drho * d2phi

    sweep = np.linspace(math.log(k_lo), math.log(k_hi), validate_n)
    vols = vol_fn(sweep)  # raises OriginOutsideShape for inadmissible shapes
    if np.any(vols <= 0.0):
        k_bad = math.exp(float(sweep[int(np.argmin(vols))]))
        raise NonpositiveVol(
            f"inverted shape implies vol <= 0 near strike {k_bad:.6g}"
        )
    return SmileCurve(
        market=ctx.market,
        k_lo=k_lo,
        k_hi=k_hi,
        vol_fn=vol_fn,
        dvol_fn=dvol_fn,
        d2vol_fn=d2vol_fn,
        label=f"{type(shape).__name__.lower()}-smile",
    )
