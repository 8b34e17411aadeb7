"""Black-Scholes-Merton pricing, deltas, and implied-volatility inversion.

Everything here is a pure function of its arguments; prices and deltas accept
numpy arrays for the strike/vol slots and broadcast in the usual way.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DegenerateTenor, NoConvergence, PriceOutOfBand

SQRT_2PI = math.sqrt(2.0 * math.pi)

# Implied-vol solver: safeguarded Newton on a maintained bracket.  The
# price tolerance sits just above the double-precision pricing noise floor;
# vol-space second derivatives downstream need every digit available.
IV_BRACKET_LO = 1e-6
IV_BRACKET_HI = 5.0
IV_MAX_ITER = 100
IV_PRICE_TOL = 1e-14


class OptionSide(enum.Enum):
    CALL = "call"
    PUT = "put"


class DeltaConvention(enum.Enum):
    """How a delta target is read.

    FORWARD_N: the target is a plain N(-d1) value.
    SPOT_PIPS: the target is a raw |put delta| = e^{-qT} N(-d1).
    """

    FORWARD_N = "forward-n"
    SPOT_PIPS = "spot-pips"


@dataclass(frozen=True)
class MarketState:
    """Market context (S0, r, q, T) carried by every pricing call.

    Rates are continuously compounded per year; tenor is in years.
    """

    spot: float
    dom_rate: float
    for_rate: float
    tenor: float

    def __post_init__(self):
        if not (self.spot > 0.0 and np.isfinite(self.spot)):
            raise ValueError(f"spot must be positive and finite, got {self.spot}")
        if self.tenor < 0.0 or not np.isfinite(self.tenor):
            raise ValueError(f"tenor must be >= 0 and finite, got {self.tenor}")
        if not (np.isfinite(self.dom_rate) and np.isfinite(self.for_rate)):
            raise ValueError("rates must be finite")

    def forward(self) -> float:
        return self.spot * math.exp((self.dom_rate - self.for_rate) * self.tenor)

    def df_dom(self) -> float:
        """Domestic discount factor e^{-rT}."""
        return math.exp(-self.dom_rate * self.tenor)

    def df_for(self) -> float:
        """Foreign discount factor e^{-qT}."""
        return math.exp(-self.for_rate * self.tenor)


def std_normal_cdf(x):
    """Standard normal CDF N(x)."""
    return ndtr(x)


def std_normal_pdf(x):
    """Standard normal density n(x)."""
    return np.exp(-0.5 * np.square(x)) / SQRT_2PI


def std_normal_inv(p):
    """Inverse of the standard normal CDF."""
    return ndtri(p)


def d1_d2(ms: MarketState, strike, vol):
    """The BSM d1 and d2 for the given strike(s) and vol(s).

    Raises DegenerateTenor when T = 0 or vol = 0; pricing is continuous
    there but the d's are not, so callers must branch to intrinsic value.
    """
    strike = np.asarray(strike, dtype=float)
    vol = np.asarray(vol, dtype=float)
    if ms.tenor <= 0.0:
        raise DegenerateTenor("d1/d2 undefined at zero tenor")
    if np.any(vol <= 0.0):
        raise DegenerateTenor("d1/d2 undefined at zero volatility")
    if np.any(strike <= 0.0):
        raise ValueError("strike must be positive")
    sqrt_t = math.sqrt(ms.tenor)
    total = vol * sqrt_t
    d1 = (np.log(ms.spot / strike) + (ms.dom_rate - ms.for_rate) * ms.tenor) / total + 0.5 * total
    d2 = d1 - total
    if d1.ndim == 0:
        return float(d1), float(d2)
    return d1, d2


def bsm_price(ms: MarketState, strike, vol, side: OptionSide = OptionSide.CALL):
    """European vanilla price; T = 0 and vol = 0 return discounted intrinsic."""
    strike = np.asarray(strike, dtype=float)
    vol = np.asarray(vol, dtype=float)
    if np.any(strike <= 0.0):
        raise ValueError("strike must be positive")
    if np.any(vol < 0.0):
        raise ValueError("vol must be >= 0")
    dff, dfd = ms.df_for(), ms.df_dom()
    if ms.tenor <= 0.0 or np.all(vol == 0.0):
        call = np.maximum(dff * ms.spot - dfd * strike, 0.0)
    else:
        sqrt_t = math.sqrt(ms.tenor)
        total = vol * sqrt_t
        with np.errstate(divide="ignore"):
            d1 = np.where(
                total > 0.0,
                (np.log(ms.spot / strike) + (ms.dom_rate - ms.for_rate) * ms.tenor)
                / np.where(total > 0.0, total, 1.0)
                + 0.5 * total,
                np.inf,
            )
        d2 = d1 - total
        live = dff * ms.spot * ndtr(d1) - dfd * strike * ndtr(d2)
        call = np.where(total > 0.0, live, np.maximum(dff * ms.spot - dfd * strike, 0.0))
    if side is OptionSide.CALL:
        out = call
    else:
        out = call - dff * ms.spot + dfd * strike
    return float(out) if np.ndim(out) == 0 else out


def bsm_delta(ms: MarketState, strike, vol, side: OptionSide = OptionSide.CALL):
    """Spot delta: e^{-qT} N(d1) for calls, minus e^{-qT} N(-d1) for puts."""
    d1, _ = d1_d2(ms, strike, vol)
    dff = ms.df_for()
    if side is OptionSide.CALL:
        return dff * ndtr(d1)
    return dff * (ndtr(d1) - 1.0)


def bsm_vega(ms: MarketState, strike, vol):
    """Price sensitivity to vol (per unit of vol)."""
    d1, _ = d1_d2(ms, strike, vol)
    return ms.df_for() * ms.spot * std_normal_pdf(d1) * math.sqrt(ms.tenor)


def d1_d2_identity_residual(ms: MarketState, strike, vol) -> float:
    """|S0 e^{-qT} n(d1) - K e^{-rT} n(d2)|, zero in exact arithmetic."""
    d1, d2 = d1_d2(ms, strike, vol)
    lhs = ms.spot * ms.df_for() * std_normal_pdf(d1)
    rhs = np.asarray(strike, dtype=float) * ms.df_dom() * std_normal_pdf(d2)
    res = np.abs(lhs - rhs)
    return float(res) if np.ndim(res) == 0 else res


def atm_rn_lognormal(ms: MarketState, vol: float) -> float:
    """Strike zeroing the call+put delta under a flat vol: S0 e^{(r-q+vol^2/2)T}."""
    if vol < 0.0:
        raise ValueError("vol must be >= 0")
    return ms.spot * math.exp((ms.dom_rate - ms.for_rate + 0.5 * vol * vol) * ms.tenor)


def strike_for_target_nd1(ms: MarketState, vol: float, target: float) -> float:
    """Strike where N(-d1(K)) equals ``target`` under a flat vol.

    Closed form: K = S0 exp(z vol sqrt(T) + (r - q + vol^2/2) T) with
    z the normal quantile of the target.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target must lie in (0, 1)")
    z = float(ndtri(target))
    return ms.spot * math.exp(
        z * vol * math.sqrt(ms.tenor)
        + (ms.dom_rate - ms.for_rate + 0.5 * vol * vol) * ms.tenor
    )


def _price_band(ms: MarketState, strike: float, side: OptionSide) -> tuple[float, float]:
    """Open no-arbitrage band (intrinsic, forward-bound) for one option."""
    dff, dfd = ms.df_for(), ms.df_dom()
    if side is OptionSide.CALL:
        return max(dff * ms.spot - dfd * strike, 0.0), dff * ms.spot
    return max(dfd * strike - dff * ms.spot, 0.0), dfd * strike


def implied_vol_grid(ms: MarketState, strikes, prices, side: OptionSide = OptionSide.CALL):
    """Vectorised implied vol for arrays of in-band prices.

    Safeguarded Newton on a per-element bracket; every in-band price inside
    the [IV_BRACKET_LO, IV_BRACKET_HI] vol range converges.
    """
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    prices = np.atleast_1d(np.asarray(prices, dtype=float))
    if ms.tenor <= 0.0:
        raise PriceOutOfBand("implied vol undefined at zero tenor")
    lo_p = bsm_price(ms, strikes, np.full_like(strikes, IV_BRACKET_LO), side)
    hi_p = bsm_price(ms, strikes, np.full_like(strikes, IV_BRACKET_HI), side)
    if np.any(prices <= lo_p) or np.any(prices >= hi_p):
        bad = int(np.argmax((prices <= lo_p) | (prices >= hi_p)))
        raise PriceOutOfBand(
            f"price {prices[bad]:.6g} at strike {strikes[bad]:.6g} outside the "
            f"attainable band ({lo_p[bad] if np.ndim(lo_p) else lo_p:.6g}, "
            f"{hi_p[bad] if np.ndim(hi_p) else hi_p:.6g})"
        )
    lo = np.full_like(strikes, IV_BRACKET_LO)
    hi = np.full_like(strikes, IV_BRACKET_HI)
    sig = np.full_like(strikes, 0.25)
    scale = np.maximum(np.abs(prices), 1.0)
    for _ in range(IV_MAX_ITER):
        f = bsm_price(ms, strikes, sig, side) - prices
        lo = np.where(f < 0.0, np.maximum(lo, sig), lo)
        hi = np.where(f > 0.0, np.minimum(hi, sig), hi)
        if np.all(np.abs(f) <= IV_PRICE_TOL * scale):
            break
        vega = bsm_vega(ms, strikes, sig)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = sig - f / vega
        bad = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        if np.all(np.abs(cand - sig) <= 1e-16 * np.maximum(cand, IV_BRACKET_LO)):
            sig = cand
            break  # stagnated at the pricing-noise floor
        sig = cand
    else:
        f = bsm_price(ms, strikes, sig, side) - prices
        if np.any(np.abs(f) > 1e-8 * scale):
            raise NoConvergence("implied vol iteration budget exhausted")
    return sig


def implied_vol(
    ms: MarketState, strike: float, observed_price: float, side: OptionSide = OptionSide.CALL
) -> float:
    """Volatility making the BSM price match ``observed_price``.

    Raises PriceOutOfBand when the price sits outside the no-arbitrage band
    (or outside the solver's vol bracket), NoConvergence otherwise-never.
    """
    lo_b, hi_b = _price_band(ms, strike, side)
    if not lo_b < observed_price < hi_b:
        raise PriceOutOfBand(
            f"price {observed_price:.6g} outside no-arbitrage band ({lo_b:.6g}, {hi_b:.6g})"
        )
    return float(implied_vol_grid(ms, [strike], [observed_price], side)[0])
