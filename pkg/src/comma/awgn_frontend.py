"""Single-antenna non-fading front end: threshold detection and PUPE bound.

The M = 1 adder channel with unit channels maps orthogonal modulation onto
a real scalar per symbol bin: an active bin observes sqrt(P)(1+s) + z with
s ~ Bino(K_a-1, 1/q) colliding users and z ~ N(0,1), an idle bin observes
z alone.  Thresholding at theta turns the channel into a noisy A-channel
with p_fa = Q(theta) and the misdetection mixture below; concatenation
with an outer A-channel code gives the end-to-end PUPE bound.  An ALOHA
normal-approximation baseline is included for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, ndtr, ndtri
from scipy.stats import binom

from comma.achannel import AChannelParams, BoundResult, theorem1_bound

__all__ = [
    "ThresholdConfig",
    "FrontEndRates",
    "q_function",
    "q_function_inv",
    "frontend_rates",
    "solve_threshold",
    "theorem2_pupe",
    "aloha_ebn0",
]


@dataclass(frozen=True)
class ThresholdConfig:
    theta: float
    P: float
    K_a: int
    q: int

    def __post_init__(self):
        if self.P <= 0:
            raise ValueError("P must be positive (linear scale)")
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")
        if self.K_a < 1 or self.q < 1:
            raise ValueError("K_a and q must be >= 1")


@dataclass(frozen=True)
class FrontEndRates:
    p_fa: float
    p_md: float


def q_function(x: float | np.ndarray) -> float | np.ndarray:
    """Standard normal tail probability Q(x) = P[N(0,1) > x]."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


def q_function_inv(p: float) -> float:
    """Inverse of the Gaussian tail Q; Q^{-1}(0.5) = 0."""
    return float(-ndtri(p))


def frontend_rates(cfg: ThresholdConfig) -> FrontEndRates:
    """False-alarm and misdetection probabilities of the threshold detector.

    p_fa = Q(theta); p_md = E_s[Phi(theta - sqrt(P)(1+s))], the probability
    that the amplitude of a truly active bin falls below the threshold,
    with the collision count s ~ Bino(K_a-1, 1/q) summed exactly.
    """
    s = np.arange(cfg.K_a)
    w = binom.pmf(s, cfg.K_a - 1, 1.0 / cfg.q)
    p_md = float(w @ ndtr(cfg.theta - math.sqrt(cfg.P) * (1 + s)))
    return FrontEndRates(p_fa=q_function(cfg.theta), p_md=p_md)


def solve_threshold(
    target_pmd: float,
    P: float,
    K_a: int,
    q: int,
) -> float:
    """Threshold theta with misdetection probability equal to target_pmd.

    p_md is continuous and strictly increasing in theta, so plain bisection
    converges; stops at |p_md - target| <= 1e-12 * target or interval
    width < 1e-12.
    """
    if not 0.0 < target_pmd < 1.0:
        raise ValueError("target_pmd must be in (0,1)")

    def pmd(theta: float) -> float:
        return frontend_rates(ThresholdConfig(theta, P, K_a, q)).p_md

    lo, hi = -40.0, math.sqrt(P) * K_a + 40.0
    if pmd(lo) > target_pmd or pmd(hi) < target_pmd:
        raise ValueError("target misdetection rate not bracketed")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        v = pmd(mid)
        if abs(v - target_pmd) <= 1e-12 * target_pmd:
            return mid
        if v < target_pmd:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def theorem2_pupe(
    params: AChannelParams,
    P: float,
    theta: float,
    mc_samples: int = 10_000,
    seed: int = 0,
) -> BoundResult:
    """End-to-end PUPE bound: n*p_md + (1 - n*p_md) * eps_A-ch(Q(theta)).

    The outer A-channel bound is evaluated at the false-alarm rate induced
    by the threshold; any misdetection is charged as a full error.
    """
    rates = frontend_rates(ThresholdConfig(theta, P, params.K_a, params.q))
    inner = AChannelParams(params.K_a, params.q, params.n, params.B, rates.p_fa)
    eps_ach = theorem1_bound(inner, mc_samples=mc_samples, seed=seed)
    npmd = params.n * rates.p_md
    value = npmd + (1.0 - npmd) * eps_ach.value
    return BoundResult(value=min(max(value, 0.0), 1.0), stderr=(1.0 - npmd) * eps_ach.stderr)


def _aloha_single_user_eps(P: float, n: int, B: int) -> float:
    """Single-user error from the complex-AWGN normal approximation.

    Solves B*ln2 = n ln(1+P) - sqrt(n V) Q^{-1}(eps) for eps, with channel
    dispersion V = P(2+P)/(1+P)^2 in nats^2.
    """
    cap = n * math.log1p(P)
    disp = n * P * (2.0 + P) / (1.0 + P) ** 2
    return q_function((cap - B * math.log(2.0)) / math.sqrt(disp))


def aloha_ebn0(
    K_a: int,
    B: int,
    n_tot: int,
    eps_target: float,
    p_db_grid: np.ndarray | None = None,
    max_subframes: int | None = None,
) -> float | None:
    """Minimum E_b/N0 in dB for slotted ALOHA at per-user error eps_target.

    The frame is split into L subframes of length floor(n_tot/L); a user
    succeeds when no other user picks its subframe and the single-user
    normal-approximation decoder succeeds.  P is searched on a 0.1 dB grid
    for every L up to n_tot (collision avoidance alone forces L well above
    K_a at small eps_target); returns None when no (L, P) pair works.
    """
    if p_db_grid is None:
        p_db_grid = np.arange(-20.0, 40.0 + 1e-9, 0.1)
    if max_subframes is None:
        max_subframes = n_tot
    best = None
    for L in range(1, max_subframes + 1):
        n_sub = n_tot // L
        if n_sub < 1:
            break
        p_nc = (1.0 - 1.0 / L) ** (K_a - 1) if L > 1 else (1.0 if K_a == 1 else 0.0)
        if p_nc <= 0:
            continue
        eps_su_max = 1.0 - (1.0 - eps_target) / p_nc
        if eps_su_max <= 0:
            continue

        # eps_su is decreasing in P: bisect the grid for the smallest
        # feasible power.
        def ok(idx: int) -> bool:
            return _aloha_single_user_eps(10.0 ** (p_db_grid[idx] / 10.0), n_sub, B) <= eps_su_max

        lo, hi = 0, len(p_db_grid) - 1
        if not ok(hi):
            continue
        if not ok(lo):
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if ok(mid):
                    hi = mid
                else:
                    lo = mid
        else:
            hi = lo
        ebn0 = n_sub * 10.0 ** (p_db_grid[hi] / 10.0) / B
        if best is None or ebn0 < best:
            best = ebn0
    return None if best is None else 10.0 * math.log10(best)
