"""Two-way bridge between volatility smiles and risk-neutral densities.

A SmileCurve is an evaluable sigma(K) on a stated strike domain, carrying
exact first and second derivatives with respect to ln K.  Densities follow
from the smile through the closed-form second strike derivative of the call
price; the same bracket expression decides non-negativity of the density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .bsm import SQRT_2PI, DeltaConvention, MarketState, bsm_price, implied_vol_grid
from .distributions import DensityCurve, Distribution, FORWARD_CONSISTENCY_TOL
from .errors import DomainTooNarrow, InconsistentForward, TargetOutsideDomain

DEFAULT_GRID_POINTS = 2001
DEFAULT_FD_STEP = 1e-3  # central-difference step in ln K


@dataclass(frozen=True)
class GridSpec:
    """Strike-grid recipe for building smiles from distributions.

    The grid spans the [delta_lo, delta_hi] N(-d1) window of a flat-vol
    proxy at the at-the-money-forward vol, extended by ``extend`` of its
    log-strike width at each end, then clipped to the distribution's strike
    bounds.  ``width_mult`` widens the proxy window for heavy-tailed cases.
    """

    n: int = DEFAULT_GRID_POINTS
    delta_lo: float = 0.005
    delta_hi: float = 0.995
    extend: float = 0.10
    width_mult: float = 1.0

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("grid needs at least 16 points")
        if not 0.0 < self.delta_lo < self.delta_hi < 1.0:
            raise ValueError("need 0 < delta_lo < delta_hi < 1")


@dataclass(frozen=True)
class DeltaAnchor:
    """A strike pinned by a delta target, with the smile vol there."""

    target: float
    strike: float
    vol: float
    convention: DeltaConvention = DeltaConvention.FORWARD_N


@dataclass(frozen=True)
class SmileCurve:
    """sigma(K) on [k_lo, k_hi] with exact log-strike derivatives.

    ``vol_fn`` maps ln K -> sigma; ``dvol_fn`` and ``d2vol_fn`` are its
    first and second derivatives in ln K (spline derivatives for grid-backed
    curves, chain-rule closed forms for shape-backed ones).
    """

    market: MarketState
    k_lo: float
    k_hi: float
    vol_fn: Callable[[np.ndarray], np.ndarray]
    dvol_fn: Callable[[np.ndarray], np.ndarray]
    d2vol_fn: Callable[[np.ndarray], np.ndarray]
    label: str = "smile"

    def __post_init__(self):
        if not 0.0 < self.k_lo < self.k_hi:
            raise ValueError("need 0 < k_lo < k_hi")

    def vol(self, strike):
        """Implied volatility at the given strike(s)."""
        out = self.vol_fn(np.log(np.asarray(strike, dtype=float)))
        return float(out) if np.ndim(out) == 0 else out

    def vol_with_derivs(self, strike):
        """(sigma, d sigma/d lnK, d^2 sigma/d lnK^2) at the given strike(s)."""
        lnk = np.log(np.asarray(strike, dtype=float))
        return self.vol_fn(lnk), self.dvol_fn(lnk), self.d2vol_fn(lnk)

    def d1(self, strike, vol=None):
        """BSM d1 evaluated with the smile vol (or a supplied vol)."""
        strike = np.asarray(strike, dtype=float)
        sig = self.vol(strike) if vol is None else vol
        ms = self.market
        total = sig * math.sqrt(ms.tenor)
        return (
            np.log(ms.spot / strike) + (ms.dom_rate - ms.for_rate) * ms.tenor
        ) / total + 0.5 * total

    def contains(self, strikes) -> bool:
        strikes = np.asarray(strikes, dtype=float)
        return bool(strikes.min() >= self.k_lo and strikes.max() <= self.k_hi)

    def default_grid(self, n: int = DEFAULT_GRID_POINTS) -> np.ndarray:
        return np.exp(np.linspace(math.log(self.k_lo), math.log(self.k_hi), n))


def flat_smile(ms: MarketState, vol: float, k_lo: float | None = None, k_hi: float | None = None) -> SmileCurve:
    """A constant-vol smile (the log-normal case)."""
    if vol <= 0.0:
        raise ValueError("vol must be positive")
    if k_lo is None or k_hi is None:
        width = 6.0 * vol * math.sqrt(max(ms.tenor, 1e-12)) + 0.5
        fwd = ms.forward()
        k_lo = fwd * math.exp(-width) if k_lo is None else k_lo
        k_hi = fwd * math.exp(width) if k_hi is None else k_hi
    return SmileCurve(
        market=ms,
        k_lo=k_lo,
        k_hi=k_hi,
        vol_fn=lambda lnk: np.full_like(np.asarray(lnk, dtype=float), vol),
        dvol_fn=lambda lnk: np.zeros_like(np.asarray(lnk, dtype=float)),
        d2vol_fn=lambda lnk: np.zeros_like(np.asarray(lnk, dtype=float)),
        label=f"flat({vol:g})",
    )


def _proxy_vol(dist: Distribution, ms: MarketState) -> float:
    """Implied vol of the distribution's call at the forward strike."""
    fwd = ms.forward()
    price = float(dist.call_price(ms, fwd))
    return float(implied_vol_grid(ms, [fwd], [price])[0])


def _priceable(dist: Distribution, ms: MarketState, ln_k: float) -> bool:
    """Whether the model price at e^{ln_k} sits strictly inside the vol bracket's band."""
    from .bsm import IV_BRACKET_HI, IV_BRACKET_LO

    k = math.exp(ln_k)
    price = float(dist.call_price(ms, k))
    lo = float(bsm_price(ms, k, IV_BRACKET_LO))
    hi = float(bsm_price(ms, k, IV_BRACKET_HI))
    slack = 1e-13 * max(1.0, abs(price))
    return price - lo > slack and hi - price > slack


def _shrink_to_priceable(
    dist: Distribution, ms: MarketState, ln_center: float, ln_edge: float
) -> float:
    """Pull an edge toward the centre until the price there is resolvable."""
    if _priceable(dist, ms, ln_edge):
        return ln_edge
    good, bad = ln_center, ln_edge
    for _ in range(60):
        mid = 0.5 * (good + bad)
        if _priceable(dist, ms, mid):
            good = mid
        else:
            bad = mid
    return good


def strike_grid(dist: Distribution, ms: MarketState, grid: GridSpec) -> np.ndarray:
    """Log-uniform strike grid per the GridSpec recipe.

    Edges are clipped to the distribution's strike bounds and pulled inward
    where tail prices collapse onto the arbitrage band within float
    resolution (no implied vol is recoverable there).
    """
    sqrt_t = math.sqrt(ms.tenor)
    proxy = _proxy_vol(dist, ms)
    atm_flat = ms.spot * math.exp(
        (ms.dom_rate - ms.for_rate + 0.5 * proxy * proxy) * ms.tenor
    )
    half_lo = float(ndtri(grid.delta_lo)) * proxy * sqrt_t * grid.width_mult
    half_hi = float(ndtri(grid.delta_hi)) * proxy * sqrt_t * grid.width_mult
    ln_lo = math.log(atm_flat) + half_lo
    ln_hi = math.log(atm_flat) + half_hi
    width = ln_hi - ln_lo
    ln_lo -= grid.extend * width
    ln_hi += grid.extend * width
    b_lo, b_hi = dist.strike_bounds()
    if b_lo > 0.0:
        ln_lo = max(ln_lo, math.log(b_lo))
    if math.isfinite(b_hi):
        ln_hi = min(ln_hi, math.log(b_hi))
    ln_fwd = math.log(ms.forward())
    ln_lo = _shrink_to_priceable(dist, ms, ln_fwd, ln_lo)
    ln_hi = _shrink_to_priceable(dist, ms, ln_fwd, ln_hi)
    if ln_hi <= ln_lo:
        raise DomainTooNarrow("strike bounds leave no room for the requested grid")
    return np.exp(np.linspace(ln_lo, ln_hi, grid.n))


def smile_from_distribution(
    dist: Distribution, ms: MarketState, grid: GridSpec | None = None
) -> SmileCurve:
    """Invert the distribution's call prices into a C^2 smile.

    The smile is backed by a natural cubic spline in (ln K, sigma); at every
    grid strike the BSM price at the spline value reproduces the
    distribution call price to solver accuracy.
    """
    fwd = ms.forward()
    if abs(dist.mean() - fwd) > FORWARD_CONSISTENCY_TOL * max(1.0, abs(fwd)):
        raise InconsistentForward(
            f"distribution mean {dist.mean():.12g} != forward {fwd:.12g}"
        )
    grid = grid or GridSpec()
    strikes = strike_grid(dist, ms, grid)
    prices = np.asarray(dist.call_price(ms, strikes), dtype=float)
    vols = implied_vol_grid(ms, strikes, prices)
    lnk = np.log(strikes)
    spline = CubicSpline(lnk, vols, bc_type="natural")
    return SmileCurve(
        market=ms,
        k_lo=float(strikes[0]),
        k_hi=float(strikes[-1]),
        vol_fn=spline,
        dvol_fn=spline.derivative(1),
        d2vol_fn=spline.derivative(2),
        label=f"{type(dist).__name__.lower()}-smile",
    )


def _nd1_target_fn(smile: SmileCurve, target: float, conv: DeltaConvention):
    eff = target
    if conv is DeltaConvention.SPOT_PIPS:
        eff = target / smile.market.df_for()
    if not 0.0 < eff < 1.0:
        raise TargetOutsideDomain(f"effective N(-d1) target {eff:.6g} outside (0, 1)")

    def f(lnk: float) -> float:
        k = math.exp(lnk)
        return float(ndtr(-smile.d1(k))) - eff

    return f


def strike_for_delta(
    smile: SmileCurve, target: float, conv: DeltaConvention = DeltaConvention.FORWARD_N
) -> DeltaAnchor:
    """Strike where the smile's N(-d1) (or raw |put delta|) hits ``target``."""
    if not 0.0 < target < 1.0:
        raise ValueError("target must lie in (0, 1)")
    f = _nd1_target_fn(smile, target, conv)
    lo, hi = math.log(smile.k_lo), math.log(smile.k_hi)
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        lnk = lo
    elif f_hi == 0.0:
        lnk = hi
    elif f_lo * f_hi > 0.0:
        raise TargetOutsideDomain(
            f"target {target:g} not bracketed on [{smile.k_lo:.6g}, {smile.k_hi:.6g}]"
        )
    else:
        lnk = brentq(f, lo, hi, xtol=1e-15)
    strike = math.exp(lnk)
    return DeltaAnchor(target=target, strike=strike, vol=float(smile.vol(strike)), convention=conv)


def atm_rn_strike(smile: SmileCurve) -> float:
    """The smile's delta-neutral-straddle strike: d1(K, sigma(K)) = 0."""
    return strike_for_delta(smile, 0.5, DeltaConvention.FORWARD_N).strike


def _derivs_on_grid(smile: SmileCurve, strikes: np.ndarray, mode: str, fd_step: float):
    lnk = np.log(strikes)
    if mode == "analytic":
        return smile.vol_fn(lnk), smile.dvol_fn(lnk), smile.d2vol_fn(lnk)
    if mode != "fd":
        raise ValueError(f"unknown derivative mode {mode!r}")
    h = fd_step
    if strikes[0] * math.exp(-h) < smile.k_lo or strikes[-1] * math.exp(h) > smile.k_hi:
        raise DomainTooNarrow("finite-difference stencil leaves the smile domain")
    sig = smile.vol_fn(lnk)
    up = smile.vol_fn(lnk + h)
    dn = smile.vol_fn(lnk - h)
    return sig, (up - dn) / (2.0 * h), (up - 2.0 * sig + dn) / (h * h)


def _bracket_terms(smile: SmileCurve, strikes: np.ndarray, mode: str, fd_step: float):
    """sigma, d1, d2 and the non-negativity bracket of the density formula."""
    ms = smile.market
    sqrt_t = math.sqrt(ms.tenor)
    sig, sig_dot, sig_ddot = _derivs_on_grid(smile, strikes, mode, fd_step)
    if np.any(sig <= 0.0):
        raise ValueError("smile must be positive on the density grid")
    total = sig * sqrt_t
    d1 = (
        np.log(ms.spot / strikes) + (ms.dom_rate - ms.for_rate) * ms.tenor
    ) / total + 0.5 * total
    d2 = d1 - total
    t = ms.tenor
    bracket = (
        1.0
        + sqrt_t * (d1 + d2) * sig_dot
        + t * d1 * d2 * sig_dot * sig_dot
        + t * sig * sig_ddot
    )
    return sig, sig_dot, sig_ddot, d1, d2, bracket


def _check_grid(smile: SmileCurve, strikes) -> np.ndarray:
    strikes = np.asarray(strikes, dtype=float)
    if strikes.ndim != 1 or strikes.size < 2:
        raise ValueError("grid must be a 1-d array with at least 2 strikes")
    if not smile.contains(strikes):
        raise DomainTooNarrow(
            f"grid [{strikes.min():.6g}, {strikes.max():.6g}] exceeds smile domain "
            f"[{smile.k_lo:.6g}, {smile.k_hi:.6g}]"
        )
    return strikes


def density_from_smile(
    smile: SmileCurve, strikes, mode: str = "analytic", fd_step: float = DEFAULT_FD_STEP
) -> DensityCurve:
    """Implied density via the strike-space second derivative of the call.

    p(K) = [1 + 2K sqrt(T) d1 sigma' + K^2 T (d1 d2 sigma'^2 + sigma sigma'')]
           * e^{-d2^2/2} / (K sigma sqrt(2 pi T))

    with primes denoting strike derivatives.  Negative values are reported
    as-is; use ``nonnegativity_margin`` to detect them.
    """
    strikes = _check_grid(smile, strikes)
    ms = smile.market
    sqrt_t = math.sqrt(ms.tenor)
    sig, sig_dot, sig_ddot, d1, d2, _ = _bracket_terms(smile, strikes, mode, fd_step)
    # Strike-space derivatives from the log-strike ones.
    sig_p = sig_dot / strikes
    sig_pp = (sig_ddot - sig_dot) / (strikes * strikes)
    bracket_k = (
        1.0
        + 2.0 * strikes * sqrt_t * d1 * sig_p
        + strikes * strikes * ms.tenor * (d1 * d2 * sig_p * sig_p + sig * sig_pp)
    )
    values = bracket_k * np.exp(-0.5 * d2 * d2) / (strikes * sig * SQRT_2PI * sqrt_t)
    return DensityCurve(strikes=strikes, values=values)


def log_strike_density(
    smile: SmileCurve, strikes, mode: str = "analytic", fd_step: float = DEFAULT_FD_STEP
) -> DensityCurve:
    """Same density through the log-strike form of the formula.

    p(K) = [1 + sqrt(T)(d1 + d2) sigma_dot + T d1 d2 sigma_dot^2
            + T sigma sigma_ddot] * e^{-d2^2/2} / (K sigma sqrt(2 pi T))

    with dots denoting ln-K derivatives; serves as an internal cross-check
    of ``density_from_smile``.
    """
    strikes = _check_grid(smile, strikes)
    sqrt_t = math.sqrt(smile.market.tenor)
    sig, _, _, _, d2, bracket = _bracket_terms(smile, strikes, mode, fd_step)
    values = bracket * np.exp(-0.5 * d2 * d2) / (strikes * sig * SQRT_2PI * sqrt_t)
    return DensityCurve(strikes=strikes, values=values)


def nonnegativity_margin(
    smile: SmileCurve, strikes, mode: str = "analytic", fd_step: float = DEFAULT_FD_STEP
) -> float:
    """Minimum over the grid of the density-sign bracket.

    A negative return value is equivalent to the implied density taking
    negative values somewhere on the grid.
    """
    strikes = _check_grid(smile, strikes)
    _, _, _, _, _, bracket = _bracket_terms(smile, strikes, mode, fd_step)
    return float(np.min(bracket))
