"""Vanna-volga smile interpolation from three quotes.

Two flavours are provided.  ``vv_vol`` is the first-order smile
approximation: a weighted combination of the three anchor vols with
log-ratio (quadratic Lagrange in ln K) weights that sum to one.  It
reproduces the anchors exactly and reduces to the flat value for equal
quotes.  ``vv_vol_market`` is the market-consistency variant built on the
same weights,

    sigma(K) = sigma2 + (-sigma2 + sqrt(sigma2^2 + d1 d2 (2 sigma2 P + Q)))
               / (d1 d2),

with d1, d2 evaluated at the middle vol, P the first-order correction and
Q the anchor convexity term.  Its wings bend away from the quadratic, which
is what makes it the interesting comparison baseline; where the square-root
argument turns negative (far wings) it is clamped at zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bsm import MarketState
from .smile import DeltaAnchor, SmileCurve

MARKET_VV_SMALL_D1D2 = 1e-5  # below this, use the series form of the quotient


@dataclass(frozen=True)
class ThreeQuoteSmile:
    """Exactly three anchors with strictly increasing strikes."""

    anchors: tuple[DeltaAnchor, DeltaAnchor, DeltaAnchor]
    market: MarketState

    def __post_init__(self):
        if len(self.anchors) != 3:
            raise ValueError("exactly three anchors are required")
        k1, k2, k3 = (a.strike for a in self.anchors)
        if not k1 < k2 < k3:
            raise ValueError("anchor strikes must be strictly increasing")
        if any(a.vol <= 0.0 for a in self.anchors):
            raise ValueError("anchor vols must be positive")

    @property
    def strikes(self) -> tuple[float, float, float]:
        return tuple(a.strike for a in self.anchors)

    @property
    def vols(self) -> tuple[float, float, float]:
        return tuple(a.vol for a in self.anchors)


def _log_weights(q: ThreeQuoteSmile, lnk: np.ndarray):
    m1, m2, m3 = (math.log(k) for k in q.strikes)
    w1 = (lnk - m2) * (lnk - m3) / ((m1 - m2) * (m1 - m3))
    w2 = (lnk - m1) * (lnk - m3) / ((m2 - m1) * (m2 - m3))
    w3 = (lnk - m1) * (lnk - m2) / ((m3 - m1) * (m3 - m2))
    return w1, w2, w3


def vv_weights(q: ThreeQuoteSmile, strike):
    """The three log-ratio interpolation weights; they sum to one at every K."""
    lnk = np.log(np.asarray(strike, dtype=float))
    return _log_weights(q, lnk)


def vv_vol(q: ThreeQuoteSmile, strike):
    """First-order vanna-volga vol at the given strike(s)."""
    strike = np.asarray(strike, dtype=float)
    if np.any(strike <= 0.0):
        raise ValueError("strike must be positive")
    w1, w2, w3 = vv_weights(q, strike)
    s1, s2, s3 = q.vols
    out = w1 * s1 + w2 * s2 + w3 * s3
    return float(out) if np.ndim(out) == 0 else out


class _FirstOrder:
    """sigma(lnK) in Lagrange form: exact at the anchors by construction."""

    def __init__(self, q: ThreeQuoteSmile):
        self.q = q
        m1, m2, m3 = (math.log(k) for k in q.strikes)
        self.m = (m1, m2, m3)
        self.den = ((m1 - m2) * (m1 - m3), (m2 - m1) * (m2 - m3), (m3 - m1) * (m3 - m2))
        s1, s2, s3 = q.vols
        self.curv = 2.0 * (s1 / self.den[0] + s2 / self.den[1] + s3 / self.den[2])

    def vol(self, lnk):
        w1, w2, w3 = _log_weights(self.q, np.asarray(lnk, dtype=float))
        s1, s2, s3 = self.q.vols
        return w1 * s1 + w2 * s2 + w3 * s3

    def dvol(self, lnk):
        lnk = np.asarray(lnk, dtype=float)
        m1, m2, m3 = self.m
        s1, s2, s3 = self.q.vols
        return (
            s1 * (2.0 * lnk - m2 - m3) / self.den[0]
            + s2 * (2.0 * lnk - m1 - m3) / self.den[1]
            + s3 * (2.0 * lnk - m1 - m2) / self.den[2]
        )

    def d2vol(self, lnk):
        return np.full_like(np.asarray(lnk, dtype=float), self.curv)


class _MarketOrder:
    """Market vanna-volga vol with exact ln-K derivatives.

    All building blocks are quadratics in m = ln K: the Lagrange terms P and
    Q, and D = d1 d2 at the middle vol.  The vol, its derivative, and its
    second derivative follow by differentiating the quotient, switching to a
    series expansion where D crosses zero and to the clamped branch where the
    square-root argument is negative.
    """

    def __init__(self, q: ThreeQuoteSmile, ms: MarketState):
        s1, s2, s3 = q.vols
        self.s2 = s2
        c = s2 * math.sqrt(ms.tenor)
        a1 = (math.log(ms.spot) + (ms.dom_rate - ms.for_rate) * ms.tenor) / c + 0.5 * c
        self.c = c
        self.a1 = a1
        self.a2 = a1 - c
        m = np.log(q.strikes)
        self.m = m
        d_anchor = (self.a1 - m / c) * (self.a2 - m / c)
        self.q_coef = d_anchor * np.square(np.array([s1 - s2, 0.0, s3 - s2]))
        self.sig = np.array(q.vols)

    def _pieces(self, lnk):
        lnk = np.asarray(lnk, dtype=float)
        m1, m2, m3 = self.m
        den1 = (m1 - m2) * (m1 - m3)
        den2 = (m2 - m1) * (m2 - m3)
        den3 = (m3 - m1) * (m3 - m2)
        w = np.stack(
            [
                (lnk - m2) * (lnk - m3) / den1,
                (lnk - m1) * (lnk - m3) / den2,
                (lnk - m1) * (lnk - m2) / den3,
            ]
        )
        wp = np.stack(
            [
                (2.0 * lnk - m2 - m3) / den1,
                (2.0 * lnk - m1 - m3) / den2,
                (2.0 * lnk - m1 - m2) / den3,
            ]
        )
        wpp = np.array([2.0 / den1, 2.0 / den2, 2.0 / den3])
        p = np.tensordot(self.sig, w, axes=1) - self.s2
        p1 = np.tensordot(self.sig, wp, axes=1)
        p2 = float(np.dot(self.sig, wpp))
        qq = np.tensordot(self.q_coef, w, axes=1)
        q1 = np.tensordot(self.q_coef, wp, axes=1)
        q2 = float(np.dot(self.q_coef, wpp))
        s2 = self.s2
        b = 2.0 * s2 * p + qq
        b1 = 2.0 * s2 * p1 + q1
        b2 = 2.0 * s2 * p2 + q2
        d1 = self.a1 - lnk / self.c
        d2_ = self.a2 - lnk / self.c
        dd = d1 * d2_
        dd1 = -(d1 + d2_) / self.c
        dd2 = 2.0 / (self.c * self.c)
        return b, b1, b2, dd, dd1, dd2

    def _all(self, lnk):
        lnk = np.asarray(lnk, dtype=float)
        s2 = self.s2
        b, b1, b2, dd, dd1, dd2 = self._pieces(lnk)
        arg = s2 * s2 + dd * b
        clamped = arg <= 0.0
        small = (np.abs(dd) <= MARKET_VV_SMALL_D1D2) & ~clamped

        with np.errstate(divide="ignore", invalid="ignore"):
            w_ = np.sqrt(np.where(arg > 0.0, arg, 1.0))
            w1_ = (dd1 * b + dd * b1) / (2.0 * w_)
            w2_ = (dd2 * b + 2.0 * dd1 * b1 + dd * b2) / (2.0 * w_) - w1_ * w1_ / w_
            sig_m = s2 + (w_ - s2) / dd
            dsig_m = w1_ / dd - (w_ - s2) * dd1 / (dd * dd)
            d2sig_m = (
                w2_ / dd
                - 2.0 * w1_ * dd1 / (dd * dd)
                - (w_ - s2) * dd2 / (dd * dd)
                + 2.0 * (w_ - s2) * dd1 * dd1 / dd**3
            )
            # Clamped branch: sqrt argument pinned at zero.
            sig_c = s2 - s2 / dd
            dsig_c = s2 * dd1 / (dd * dd)
            d2sig_c = s2 * (dd2 * dd - 2.0 * dd1 * dd1) / dd**3

        # Series around d1 d2 = 0 (the quotient is smooth there).
        s3_, s5_, s7_ = s2**3, s2**5, s2**7
        sig_s = s2 + b / (2.0 * s2) - dd * b * b / (8.0 * s3_) + dd * dd * b**3 / (16.0 * s5_)
        dsig_s = (
            b1 / (2.0 * s2)
            - (dd1 * b * b + 2.0 * dd * b * b1) / (8.0 * s3_)
            + (2.0 * dd * dd1 * b**3 + 3.0 * dd * dd * b * b * b1) / (16.0 * s5_)
        )
        d2sig_s = (
            b2 / (2.0 * s2)
            - (dd2 * b * b + 4.0 * dd1 * b * b1 + 2.0 * dd * b1 * b1 + 2.0 * dd * b * b2)
            / (8.0 * s3_)
            + (
                2.0 * dd1 * dd1 * b**3
                + 2.0 * dd * dd2 * b**3
                + 12.0 * dd * dd1 * b * b * b1
                + 6.0 * dd * dd * b * b1 * b1
                + 3.0 * dd * dd * b * b * b2
            )
            / (16.0 * s5_)
        )

        sig = np.where(clamped, sig_c, np.where(small, sig_s, sig_m))
        dsig = np.where(clamped, dsig_c, np.where(small, dsig_s, dsig_m))
        d2sig = np.where(clamped, d2sig_c, np.where(small, d2sig_s, d2sig_m))
        return sig, dsig, d2sig

    def vol(self, lnk):
        return self._all(lnk)[0]

    def dvol(self, lnk):
        return self._all(lnk)[1]

    def d2vol(self, lnk):
        return self._all(lnk)[2]


def vv_vol_market(q: ThreeQuoteSmile, strike):
    """Market vanna-volga vol at the given strike(s)."""
    strike = np.asarray(strike, dtype=float)
    if np.any(strike <= 0.0):
        raise ValueError("strike must be positive")
    out = _MarketOrder(q, q.market).vol(np.log(strike))
    return float(out) if np.ndim(out) == 0 else out


def vv_smile(
    q: ThreeQuoteSmile,
    k_lo: float | None = None,
    k_hi: float | None = None,
    variant: str = "market",
) -> SmileCurve:
    """Wrap a three-quote interpolation as a SmileCurve.

    ``variant`` selects "first" (first-order approximation) or "market".
    Extrapolation beyond the anchors is permitted; the domain defaults to a
    generous band around them.
    """
    k1, _, k3 = q.strikes
    if k_lo is None:
        k_lo = k1 * math.exp(-2.0)
    if k_hi is None:
        k_hi = k3 * math.exp(2.0)
    if variant == "first":
        backend = _FirstOrder(q)
    elif variant == "market":
        backend = _MarketOrder(q, q.market)
    else:
        raise ValueError(f"unknown vanna-volga variant {variant!r}")
    return SmileCurve(
        market=q.market,
        k_lo=k_lo,
        k_hi=k_hi,
        vol_fn=backend.vol,
        dvol_fn=backend.dvol,
        d2vol_fn=backend.d2vol,
        label=f"vanna-volga-{variant}",
    )
