"""Tests for the smile <-> density bridge."""
import math

import numpy as np
import pytest

from smilegeo.bsm import DeltaConvention, MarketState, bsm_price
from smilegeo.distributions import Gamma, LogNormal, Normal, StudentT, Uniform
from smilegeo.errors import DomainTooNarrow, TargetOutsideDomain
from smilegeo.smile import (
    GridSpec,
    SmileCurve,
    atm_rn_strike,
    density_from_smile,
    flat_smile,
    log_strike_density,
    nonnegativity_margin,
    smile_from_distribution,
    strike_for_delta,
)
from smilegeo.workflows import market_state_for, smile_with_coverage

FLAT_MS = MarketState(spot=100.0, dom_rate=0.0, for_rate=0.0, tenor=1.0)
GAMMA = Gamma(kappa=5.12, theta=0.64)


def synthetic_sine_smile(ms: MarketState) -> SmileCurve:
    """A C^2 analytic smile: sigma(K) = 0.2 + 0.05 sin(ln K)."""
    return SmileCurve(
        market=ms,
        k_lo=ms.spot * math.exp(-1.5),
        k_hi=ms.spot * math.exp(1.5),
        vol_fn=lambda lnk: 0.2 + 0.05 * np.sin(lnk),
        dvol_fn=lambda lnk: 0.05 * np.cos(lnk),
        d2vol_fn=lambda lnk: -0.05 * np.sin(lnk),
        label="sine",
    )


class TestSmileFromDistribution:
    @pytest.mark.parametrize(
        "dist",
        [
            GAMMA,
            LogNormal(mu=1.0, s=0.25),
            Normal(mu=11.3328, s=3.0),
            StudentT(mu=3.7201, nu=7.3824),
            Uniform(a=2.0109, b=5.4750),
        ],
        ids=lambda d: type(d).__name__,
    )
    def test_prices_reproduced_on_grid(self, dist):
        ms = market_state_for(dist)
        smile = smile_from_distribution(dist, ms, GridSpec(n=501))
        ks = smile.default_grid(501)
        resid = np.abs(
            bsm_price(ms, ks, np.asarray(smile.vol(ks)))
            - np.asarray(dist.call_price(ms, ks))
        )
        assert np.max(resid) <= 1e-10

    def test_lognormal_gives_constant_vol(self):
        dist = LogNormal(mu=1.2, s=0.3)
        ms = MarketState(spot=dist.mean(), dom_rate=0.0, for_rate=0.0, tenor=1.0)
        smile = smile_from_distribution(dist, ms)
        vols = np.asarray(smile.vol(smile.default_grid(301)))
        assert np.max(np.abs(vols - 0.3)) <= 1e-8

    def test_uniform_smile_has_steep_wings(self):
        dist = Uniform(a=2.0109, b=5.4750)
        smile = smile_from_distribution(dist, market_state_for(dist))
        ks = smile.default_grid(101)
        vols = np.asarray(smile.vol(ks))
        assert vols[0] < vols[len(ks) // 2] < 1.0
        # vol collapses toward zero at the support edges
        assert vols[-1] < 0.2


class TestStrikeForDelta:
    def test_flat_smile_closed_form(self):
        smile = flat_smile(FLAT_MS, 0.2)
        anchor = strike_for_delta(smile, 0.5, DeltaConvention.FORWARD_N)
        assert anchor.strike == pytest.approx(100.0 * math.exp(0.02), rel=1e-12)

    def test_gamma_anchor_targets_hit(self):
        ms = market_state_for(GAMMA)
        smile = smile_from_distribution(GAMMA, ms)
        from scipy.special import ndtr

        for target in (0.25, 0.5, 0.75):
            anchor = strike_for_delta(smile, target)
            assert float(ndtr(-smile.d1(anchor.strike))) == pytest.approx(target, abs=1e-10)

    def test_spot_pips_convention(self):
        ms = MarketState(spot=1.2, dom_rate=0.03, for_rate=0.02, tenor=2.0)
        smile = flat_smile(ms, 0.15)
        anchor = strike_for_delta(smile, 0.25, DeltaConvention.SPOT_PIPS)
        from scipy.special import ndtr

        raw_put_delta = ms.df_for() * float(ndtr(-smile.d1(anchor.strike)))
        assert raw_put_delta == pytest.approx(0.25, abs=1e-10)

    def test_monotone_target_strike(self):
        ms = market_state_for(GAMMA)
        smile = smile_from_distribution(GAMMA, ms)
        strikes = [strike_for_delta(smile, t).strike for t in (0.1, 0.25, 0.5, 0.75, 0.9)]
        assert strikes == sorted(strikes)

    def test_target_outside_domain(self):
        smile = flat_smile(FLAT_MS, 0.2, k_lo=95.0, k_hi=108.0)
        with pytest.raises(TargetOutsideDomain):
            strike_for_delta(smile, 0.01)


class TestDensityFromSmile:
    def test_flat_smile_recovers_lognormal(self):
        smile = flat_smile(FLAT_MS, 0.2)
        ln = LogNormal(mu=math.log(100.0) - 0.02, s=0.2)
        grid = np.exp(np.linspace(math.log(ln.quantile(0.01)), math.log(ln.quantile(0.99)), 1001))
        got = density_from_smile(smile, grid)
        ref = ln.pdf(grid)
        assert np.max(np.abs(got.values - ref) / ref) <= 1e-6

    def test_margin_one_for_flat(self):
        smile = flat_smile(FLAT_MS, 0.2)
        grid = smile.default_grid(101)
        assert nonnegativity_margin(smile, grid) == pytest.approx(1.0, abs=1e-12)

    def test_dual_formulas_agree_analytic(self):
        smile = synthetic_sine_smile(FLAT_MS)
        grid = smile.default_grid(501)
        a = density_from_smile(smile, grid).values
        b = log_strike_density(smile, grid).values
        assert np.max(np.abs(a - b)) <= 1e-8

    def test_dual_formulas_agree_fd(self):
        ms = market_state_for(GAMMA)
        smile = smile_from_distribution(GAMMA, ms)
        grid = np.exp(
            np.linspace(math.log(smile.k_lo) + 0.01, math.log(smile.k_hi) - 0.01, 501)
        )
        a = density_from_smile(smile, grid, mode="fd").values
        b = log_strike_density(smile, grid, mode="fd").values
        assert np.max(np.abs(a - b)) <= 1e-8

    def test_fd_close_to_analytic(self):
        smile = synthetic_sine_smile(FLAT_MS)
        grid = np.exp(np.linspace(math.log(smile.k_lo) + 0.01, math.log(smile.k_hi) - 0.01, 301))
        a = density_from_smile(smile, grid).values
        b = density_from_smile(smile, grid, mode="fd").values
        assert np.max(np.abs(a - b)) <= 1e-5

    def test_domain_too_narrow(self):
        smile = flat_smile(FLAT_MS, 0.2, k_lo=80.0, k_hi=120.0)
        with pytest.raises(DomainTooNarrow):
            density_from_smile(smile, np.linspace(70.0, 130.0, 50))
        with pytest.raises(DomainTooNarrow):
            density_from_smile(smile, np.linspace(80.0, 120.0, 50), mode="fd")


# The uniform smile crashes to zero vol at its support edges; recovering its
# density to 1e-5 at the 98%-mass boundary needs the denser grid.
ROUND_TRIP_CASES = [
    (LogNormal(mu=1.0, s=0.25), GridSpec(), 1e-6),
    (Gamma(kappa=5.12, theta=0.64), GridSpec(width_mult=1.3), 1e-5),
    (Normal(mu=11.3328, s=3.0), GridSpec(width_mult=1.5), 1e-5),
    (StudentT(mu=3.7201, nu=7.3824), GridSpec(width_mult=2.0), 1e-5),
    (Uniform(a=2.0109, b=5.4750), GridSpec(n=32001), 1e-5),
]


class TestRoundTrip:
    @pytest.mark.parametrize(
        "dist,grid,tol", ROUND_TRIP_CASES, ids=lambda v: type(v).__name__ if hasattr(v, "pdf") else ""
    )
    def test_density_recovery_central_98(self, dist, grid, tol):
        ms = market_state_for(dist)
        smile = smile_from_distribution(dist, ms, grid)
        p0 = dist.mass_below_zero()
        lo = dist.quantile(p0 + 0.01 * (1.0 - p0))
        hi = dist.quantile(p0 + 0.99 * (1.0 - p0))
        lo = max(lo, smile.k_lo * 1.001)
        hi = min(hi, smile.k_hi * 0.999)
        window = np.exp(np.linspace(math.log(lo), math.log(hi), 2001))
        got = density_from_smile(smile, window).values
        ref = np.asarray(dist.pdf(window))
        assert np.max(np.abs(got - ref) / ref) <= tol

    def test_recovered_mean_matches_forward(self):
        ms = market_state_for(GAMMA)
        smile = smile_with_coverage(GAMMA, ms, targets=(0.002, 0.998))
        grid = np.exp(
            np.linspace(math.log(smile.k_lo) + 1e-6, math.log(smile.k_hi) - 1e-6, 4001)
        )
        dens = density_from_smile(smile, grid)
        mean = np.trapezoid(grid * dens.values, grid)
        assert abs(mean - ms.forward()) <= 1e-3 * ms.forward()


class TestAtmRnStrike:
    def test_flat_matches_closed_form(self):
        smile = flat_smile(FLAT_MS, 0.2)
        assert atm_rn_strike(smile) == pytest.approx(100.0 * math.exp(0.02), rel=1e-12)

    def test_gamma_straddle_neutral(self):
        ms = market_state_for(GAMMA)
        smile = smile_from_distribution(GAMMA, ms)
        k = atm_rn_strike(smile)
        assert float(smile.d1(k)) == pytest.approx(0.0, abs=1e-10)
