"""End-to-end pipelines tying the pieces together.

``distribution_report`` runs the full study for one analytic distribution:
smile, polar representation, circle fit, inverted smile, reconstructed
densities (circle and vanna-volga), the best log-normal fit, and the KL
divergences on the stated delta window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .analysis import DivergenceReport, best_lognormal, kl_divergence
from .bsm import DeltaConvention, MarketState
from .distributions import DensityCurve, Distribution, density_curve
from .errors import TargetOutsideDomain
from .fitting import fit_circle_to_smile, smile_anchors, CIRCLE_TARGETS
from .georep import (
    RepresentationConfig,
    RepresentationCurve,
    ReprContext,
    context_for_smile,
    represent,
    smile_from_shape,
)
from .shapes import CircleShape
from .smile import (
    GridSpec,
    SmileCurve,
    density_from_smile,
    nonnegativity_margin,
    smile_from_distribution,
    strike_for_delta,
)
from .vanna_volga import ThreeQuoteSmile, vv_smile

MAX_GRID_WIDENINGS = 8


def market_state_for(dist: Distribution, dom_rate: float = 0.0, for_rate: float = 0.0,
                     tenor: float = 1.0) -> MarketState:
    """The market state whose forward equals the distribution mean."""
    spot = dist.mean() * math.exp(-(dom_rate - for_rate) * tenor)
    return MarketState(spot=spot, dom_rate=dom_rate, for_rate=for_rate, tenor=tenor)


def smile_with_coverage(
    dist: Distribution,
    ms: MarketState,
    grid: GridSpec | None = None,
    targets: tuple[float, float] = (0.01, 0.99),
) -> SmileCurve:
    """Distribution smile on a grid wide enough to bracket the delta targets.

    The default grid recipe hugs a flat-vol proxy; heavy-tailed smiles push
    their delta window past it, so the proxy window is widened until the
    smile's own N(-d1) range covers ``targets`` (support bounds permitting).
    """
    grid = grid or GridSpec()
    lo_t, hi_t = targets
    b_lo, b_hi = dist.strike_bounds()
    bounded = b_lo > 0.0 or math.isfinite(b_hi)
    for _ in range(MAX_GRID_WIDENINGS):
        smile = smile_from_distribution(dist, ms, grid)
        nd1_lo = float(ndtr(-smile.d1(smile.k_lo * 1.0000001)))
        nd1_hi = float(ndtr(-smile.d1(smile.k_hi * 0.9999999)))
        if (nd1_lo < lo_t and nd1_hi > hi_t) or bounded:
            return smile
        grid = GridSpec(
            n=grid.n,
            delta_lo=grid.delta_lo,
            delta_hi=grid.delta_hi,
            extend=grid.extend,
            width_mult=grid.width_mult * 1.6,
        )
    raise TargetOutsideDomain(
        f"could not widen the grid to cover the N(-d1) window {targets}"
    )


@dataclass(frozen=True)
class DistributionReport:
    """All artifacts of the circle-versus-baselines study for one distribution."""

    dist: Distribution
    market: MarketState
    smile: SmileCurve
    ctx: ReprContext
    curve: RepresentationCurve
    circle: CircleShape
    anchors: tuple
    circle_smile: SmileCurve
    vanna_volga_smile: SmileCurve
    window: tuple[float, float]
    window_grid: np.ndarray
    p_true: DensityCurve
    p_circle: DensityCurve
    p_vanna_volga: DensityCurve
    best_lognormal_fit: Distribution
    p_best_lognormal: DensityCurve
    kl_circle: DivergenceReport
    kl_vanna_volga: DivergenceReport
    kl_best_lognormal: DivergenceReport
    margin: float


def distribution_report(
    dist: Distribution,
    ms: MarketState | None = None,
    cfg: RepresentationConfig | None = None,
    grid: GridSpec | None = None,
    window_targets: tuple[float, float] = (0.01, 0.99),
    window_n: int = 4001,
    conv: DeltaConvention = DeltaConvention.FORWARD_N,
    vv_variant: str = "market",
) -> DistributionReport:
    """Run the full circle-versus-baselines study for one distribution."""
    ms = ms or market_state_for(dist)
    smile = smile_with_coverage(dist, ms, grid, window_targets)
    ctx = context_for_smile(smile, cfg)
    curve = represent(smile, ctx)
    circle = fit_circle_to_smile(smile, ctx, conv)

    anchors = smile_anchors(smile, ctx, CIRCLE_TARGETS, conv)
    k_lo = strike_for_delta(smile, window_targets[0], DeltaConvention.FORWARD_N).strike
    k_hi = strike_for_delta(smile, window_targets[1], DeltaConvention.FORWARD_N).strike
    window_grid = np.exp(np.linspace(math.log(k_lo), math.log(k_hi), window_n))

    circle_smile = smile_from_shape(circle, ctx, k_lo=k_lo, k_hi=k_hi)
    vv = vv_smile(
        ThreeQuoteSmile(anchors=tuple(anchors), market=ms),
        k_lo=k_lo,
        k_hi=k_hi,
        variant=vv_variant,
    )

    p_true = density_curve(dist, window_grid, rescale=True)
    p_circle = density_from_smile(circle_smile, window_grid)
    p_vv = density_from_smile(vv, window_grid)

    # Fit the log-normal on a wide quantile grid of the analysed density,
    # then judge it on the same window as the other candidates.
    q_lo = dist.restricted_quantile(1e-5)
    q_hi = dist.restricted_quantile(1.0 - 1e-5)
    fit_grid = np.exp(np.linspace(math.log(max(q_lo, 1e-12)), math.log(q_hi), 8001))
    best_ln = best_lognormal(density_curve(dist, fit_grid, rescale=True))
    p_ln = density_curve(best_ln, window_grid, rescale=False)

    return DistributionReport(
        dist=dist,
        market=ms,
        smile=smile,
        ctx=ctx,
        curve=curve,
        circle=circle,
        anchors=tuple(anchors),
        circle_smile=circle_smile,
        vanna_volga_smile=vv,
        window=(k_lo, k_hi),
        window_grid=window_grid,
        p_true=p_true,
        p_circle=p_circle,
        p_vanna_volga=p_vv,
        best_lognormal_fit=best_ln,
        p_best_lognormal=p_ln,
        kl_circle=kl_divergence(p_true, p_circle),
        kl_vanna_volga=kl_divergence(p_true, p_vv),
        kl_best_lognormal=kl_divergence(p_true, p_ln),
        margin=nonnegativity_margin(circle_smile, window_grid),
    )
