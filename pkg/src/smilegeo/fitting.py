"""Fit circles and ellipses to smiles through delta anchors.

The circle takes three anchors (25-delta put side, the delta-neutral strike,
25-delta call side as N(-d1) targets 0.25 / 0.5 / 0.75); the ellipse takes
five (targets 0.10, 0.25, 0.5, 0.75, 0.90).  The middle anchor is always the
context's centre strike.
"""
from __future__ import annotations

import numpy as np

from .bsm import DeltaConvention
from .georep import ReprContext, RepresentationConfig, context_for_smile, represent_anchors
from .shapes import CircleShape, ConicShape, circumcircle, conic_through_5
from .smile import DeltaAnchor, SmileCurve, strike_for_delta

CIRCLE_TARGETS = (0.25, 0.75)
ELLIPSE_TARGETS = (0.10, 0.25, 0.75, 0.90)


def _resolve_ctx(smile: SmileCurve, ctx) -> ReprContext:
    if isinstance(ctx, ReprContext):
        return ctx
    if ctx is None or isinstance(ctx, RepresentationConfig):
        return context_for_smile(smile, ctx)
    raise TypeError("ctx must be a ReprContext, RepresentationConfig, or None")


def smile_anchors(
    smile: SmileCurve,
    ctx: ReprContext,
    wing_targets,
    conv: DeltaConvention = DeltaConvention.FORWARD_N,
) -> list[DeltaAnchor]:
    """Wing anchors at the given targets plus the centre-strike anchor, by strike."""
    anchors = [strike_for_delta(smile, t, conv) for t in wing_targets]
    anchors.append(
        DeltaAnchor(
            target=0.5,
            strike=ctx.atm_rn,
            vol=float(smile.vol(ctx.atm_rn)),
            convention=DeltaConvention.FORWARD_N,
        )
    )
    anchors.sort(key=lambda a: a.strike)
    return anchors


def fit_circle_to_smile(
    smile: SmileCurve,
    ctx: ReprContext | RepresentationConfig | None = None,
    conv: DeltaConvention = DeltaConvention.FORWARD_N,
) -> CircleShape:
    """Circle through the represented 0.25 / centre / 0.75 anchors."""
    ctx = _resolve_ctx(smile, ctx)
    anchors = smile_anchors(smile, ctx, CIRCLE_TARGETS, conv)
    pts = represent_anchors(anchors, ctx)
    return circumcircle(pts[0], pts[1], pts[2])


def fit_ellipse_to_smile(
    smile: SmileCurve,
    ctx: ReprContext | RepresentationConfig | None = None,
    conv: DeltaConvention = DeltaConvention.FORWARD_N,
) -> ConicShape:
    """Conic through the represented 0.10 / 0.25 / centre / 0.75 / 0.90 anchors."""
    ctx = _resolve_ctx(smile, ctx)
    anchors = smile_anchors(smile, ctx, ELLIPSE_TARGETS, conv)
    pts = represent_anchors(anchors, ctx)
    return conic_through_5(pts)


def anchor_residuals(shape, points: np.ndarray) -> np.ndarray:
    """Interpolation residuals of a fitted shape at its anchor points."""
    points = np.asarray(points, dtype=float)
    if isinstance(shape, CircleShape):
        dist = np.hypot(points[:, 0] - shape.center[0], points[:, 1] - shape.center[1])
        return np.abs(dist - shape.radius)
    if isinstance(shape, ConicShape):
        return np.abs(shape.evaluate(points[:, 0], points[:, 1]))
    raise TypeError(f"unsupported shape {type(shape).__name__}")
