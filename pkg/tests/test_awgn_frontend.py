"""Front-end threshold analytics checked against Monte Carlo and identities."""

import math

import numpy as np
import pytest

from comma.achannel import AChannelParams, theorem1_bound
from comma.awgn_frontend import (
    FrontEndRates,
    ThresholdConfig,
    aloha_ebn0,
    frontend_rates,
    q_function,
    q_function_inv,
    solve_threshold,
    theorem2_pupe,
)


def test_q_function_values():
    assert q_function(0.0) == pytest.approx(0.5, abs=1e-15)
    assert q_function(1.6448536269514722) == pytest.approx(0.05, abs=1e-12)
    assert q_function(-30.0) == pytest.approx(1.0, abs=1e-12)


def test_q_function_inverse_round_trip():
    for p in (1e-8, 1e-4, 0.05, 0.3, 0.5, 0.9):
        assert q_function(q_function_inv(p)) == pytest.approx(p, rel=1e-9)


def _mc_rates(cfg, slots, seed):
    """Empirical (p_fa, p_md) from direct simulation of one symbol bin."""
    rng = np.random.default_rng(seed)
    # idle bin: pure noise
    fa = (rng.standard_normal(slots) > cfg.theta).mean()
    # active bin: own pulse plus Bino(K_a-1, 1/q) colliders
    s = rng.binomial(cfg.K_a - 1, 1.0 / cfg.q, size=slots)
    amp = math.sqrt(cfg.P) * (1 + s)
    md = (amp + rng.standard_normal(slots) <= cfg.theta).mean()
    return fa, md


@pytest.mark.parametrize("seed", range(4))
def test_frontend_rates_vs_monte_carlo(seed):
    rng = np.random.default_rng(seed)
    cfg = ThresholdConfig(
        theta=float(rng.uniform(0.0, 2.0)),
        P=float(rng.uniform(0.5, 8.0)),
        K_a=int(rng.integers(2, 12)),
        q=int(rng.integers(8, 64)),
    )
    rates = frontend_rates(cfg)
    slots = 200_000
    fa, md = _mc_rates(cfg, slots, seed + 100)
    sd_fa = math.sqrt(rates.p_fa * (1 - rates.p_fa) / slots)
    sd_md = math.sqrt(max(rates.p_md * (1 - rates.p_md), 1e-12) / slots)
    assert abs(fa - rates.p_fa) <= 4 * sd_fa + 1e-9
    assert abs(md - rates.p_md) <= 4 * sd_md + 1e-9


def test_single_user_threshold_closed_form():
    # K_a = 1: p_md = Phi(theta - sqrt(P)); target 0.5 gives theta = sqrt(P)
    theta = solve_threshold(0.5, P=4.0, K_a=1, q=16)
    assert theta == pytest.approx(2.0, abs=1e-9)


def test_solve_threshold_round_trip():
    for target in (1e-4, 1e-2, 0.2):
        theta = solve_threshold(target, P=6.0, K_a=8, q=32)
        rates = frontend_rates(ThresholdConfig(theta, 6.0, 8, 32))
        assert rates.p_md == pytest.approx(target, rel=1e-6)


def test_theorem2_composition():
    """Theorem-2 value decomposes as n*p_md + (1 - n*p_md) * eps_ach."""
    params = AChannelParams(K_a=4, q=32, n=10, B=20)
    theta = solve_threshold(0.001, P=8.0, K_a=4, q=32)
    rates = frontend_rates(ThresholdConfig(theta, 8.0, 4, 32))
    inner = AChannelParams(4, 32, 10, 20, rates.p_fa)
    eps_ach = theorem1_bound(inner, mc_samples=2000, seed=0).value
    expect = 10 * rates.p_md + (1 - 10 * rates.p_md) * eps_ach
    got = theorem2_pupe(params, P=8.0, theta=theta, mc_samples=2000, seed=0)
    assert got.value == pytest.approx(expect, rel=1e-12)


def test_theorem2_within_unit_interval():
    params = AChannelParams(K_a=4, q=32, n=10, B=20)
    res = theorem2_pupe(params, P=0.01, theta=-5.0, mc_samples=500, seed=0)
    assert 0.0 <= res.value <= 1.0


def test_aloha_single_user_matches_normal_approximation():
    """K_a = 1 never collides; the optimum is pure power allocation."""
    # With L = 1 the full frame is one subframe; eps_su = eps_target sets P.
    val = aloha_ebn0(K_a=1, B=100, n_tot=400, eps_target=0.05)
    assert val is not None
    # invert: at the reported E_b/N0 the normal approximation must pass
    from comma.awgn_frontend import _aloha_single_user_eps

    best = math.inf
    for L in (1, 2, 4):
        n_sub = 400 // L
        # smallest grid power with eps_su <= 0.05
        for p_db in np.arange(-20, 40, 0.1):
            P = 10 ** (p_db / 10)
            if _aloha_single_user_eps(P, n_sub, 100) <= 0.05:
                best = min(best, n_sub * P / 100)
                break
    assert val == pytest.approx(10 * math.log10(best), abs=1e-9)


def test_aloha_increasing_in_users():
    vals = [aloha_ebn0(K, B=60, n_tot=600, eps_target=0.05) for K in (1, 2, 4)]
    assert all(v is not None for v in vals)
    assert vals[0] < vals[1] < vals[2]


def test_aloha_infeasible_with_tight_cap():
    # with L capped near K_a the collision probability alone exceeds eps
    assert aloha_ebn0(K_a=8, B=60, n_tot=600, eps_target=0.05, max_subframes=10) is None


def test_threshold_config_validation():
    with pytest.raises(ValueError):
        ThresholdConfig(theta=0.0, P=-1.0, K_a=2, q=8)
    with pytest.raises(ValueError):
        ThresholdConfig(theta=math.nan, P=1.0, K_a=2, q=8)
    with pytest.raises(ValueError):
        solve_threshold(0.0, 1.0, 2, 8)


def test_frontend_rates_is_plain_dataclass():
    r = FrontEndRates(p_fa=0.1, p_md=0.2)
    assert (r.p_fa, r.p_md) == (0.1, 0.2)
