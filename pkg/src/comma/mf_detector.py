"""Matched-filter (half-space) detection and its bound/scaling evaluators.

Per slot, symbol j enters user k's candidate list when Re<y_j, h_k>
exceeds a per-user threshold theta_k.  Conditioned on the number s of
other users sharing a symbol bin, the statistic is Gaussian, so miss and
false-alarm rates are exact binomial mixtures of Gaussian tails; the
closed-form bound and antenna scaling law build on those mixtures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import binom

from comma.awgn_frontend import q_function, q_function_inv

__all__ = [
    "MfConfig",
    "mf_lists",
    "mixture_pmd",
    "calibrate_threshold",
    "expected_false_alarms",
    "theorem3_bound",
    "scaling_law_antennas",
]


@dataclass(frozen=True)
class MfConfig:
    """Thresholds, either explicit per user or via the policy alpha.

    Policy form: theta_k = alpha * sqrt(P) * ||h_k||^2 with alpha in [0,1].
    """

    thetas: np.ndarray | None = None
    alpha: float | None = 0.5

    def __post_init__(self):
        if self.thetas is None and self.alpha is None:
            raise ValueError("provide thetas or alpha")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0,1]")

    def resolve(self, H: np.ndarray, P: float) -> np.ndarray:
        if self.thetas is not None:
            return np.asarray(self.thetas, dtype=float)
        norms2 = (np.abs(H) ** 2).sum(axis=0)
        return self.alpha * math.sqrt(P) * norms2


def mf_lists(Y: np.ndarray, H: np.ndarray, P: float, cfg: MfConfig) -> list[np.ndarray]:
    """Variable-length candidate lists for one slot matrix Y (M x q).

    Returns, per user, the sorted array of symbols j with
    Re<y_j, h_k> > theta_k.  A symbol may appear in several users' lists.
    """
    thetas = cfg.resolve(H, P)
    corr = np.real(H.conj().T @ Y)  # (K_a, q), entry [k, j] = Re<y_j, h_k>
    return [np.flatnonzero(corr[k] > thetas[k]) for k in range(H.shape[1])]


def _collision_pmf(K_a: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    s = np.arange(K_a)
    return s, binom.pmf(s, K_a - 1, 1.0 / q)


def mixture_pmd(
    theta: float,
    h_norm2: float,
    P: float,
    K_a: int,
    q: int,
    complex_model: bool = True,
) -> float:
    """Exact misdetection probability of the MF rule for a given channel.

    Mixture over the collision count s ~ Bino(K_a-1, 1/q) of
    Q((sqrt(P) ||h||^2 - theta) / (||h|| sqrt((P s + 1)/2))); the real
    model drops the 1/2.
    """
    s, w = _collision_pmf(K_a, q)
    scale = 2.0 if complex_model else 1.0
    sd = math.sqrt(h_norm2) * np.sqrt((P * s + 1.0) / scale)
    return float(w @ ndtr((theta - math.sqrt(P) * h_norm2) / sd))


def calibrate_threshold(
    h_norm2: float,
    P: float,
    K_a: int,
    q: int,
    target_pmd: float,
    complex_model: bool = True,
) -> float:
    """Threshold whose mixture misdetection equals target_pmd (bisection).

    For K_a = 1 the single Gaussian term gives the closed form
    theta = sqrt(P) ||h||^2 - Q^{-1}(target) ||h|| / sqrt(2).
    """
    if not 0.0 < target_pmd < 1.0:
        raise ValueError("target_pmd must be in (0,1)")
    scale = 2.0 if complex_model else 1.0
    if K_a == 1:
        return math.sqrt(P) * h_norm2 - q_function_inv(target_pmd) * math.sqrt(
            h_norm2 / scale
        )
    spread = math.sqrt(h_norm2 * (P * K_a + 1.0))
    lo = math.sqrt(P) * h_norm2 - 12.0 * spread - 12.0
    hi = math.sqrt(P) * h_norm2 + 12.0 * spread + 12.0
    while hi - lo > 1e-12 * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        v = mixture_pmd(mid, h_norm2, P, K_a, q, complex_model)
        if abs(v - target_pmd) <= 1e-12 * target_pmd:
            return mid
        if v < target_pmd:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def expected_false_alarms(
    h_norm2: float,
    theta: float,
    P: float,
    K_a: int,
    q: int,
    complex_model: bool = True,
) -> float:
    """Expected number of false-alarmed symbols per slot for one user.

    (q-1) sum_s Q(theta / (||h|| sqrt((s P + 1)/2))) Bino(s; K_a-1, 1/q).
    """
    if q <= 1:
        return 0.0
    s, w = _collision_pmf(K_a, q)
    scale = 2.0 if complex_model else 1.0
    sd = math.sqrt(h_norm2) * np.sqrt((P * s + 1.0) / scale)
    return float((q - 1) * (w @ q_function(theta / sd)))


def theorem3_bound(K_a: int, q: int, M: int, P: float, n: int, eps: float) -> float:
    """Closed-form PUPE bound for MF detection plus a certified outer code.

    exp(log n - M log(1 + (P/2) / (P (K_a/q + K_a^{3/4}) + 1)))
    + exp(-2 sqrt(K_a)) + eps, each exponential clamped to 1 and the total
    to [0, 1]; evaluated in log domain.
    """
    log_gain = math.log1p((P / 2.0) / (P * (K_a / q + K_a**0.75) + 1.0))
    first = math.exp(min(0.0, math.log(n) - M * log_gain))
    second = math.exp(-2.0 * math.sqrt(K_a))
    return min(first + second + eps, 1.0)


def scaling_law_antennas(
    K_a: int, q: int, P: float, B: int, P_e: float
) -> tuple[float, float]:
    """Antennas sufficient for PUPE P_e, and the sum spectral efficiency.

    M = K_a/q + min{K_a^{3/4}, sqrt(log(1/P_e)/2) K_a^{1/2}} + 2/P
        + log B - log P_e;  S = K_a log2(q) / q.
    """
    if not 0.0 < P_e < 1.0:
        raise ValueError("P_e must be in (0,1)")
    M = (
        K_a / q
        + min(K_a**0.75, math.sqrt(math.log(1.0 / P_e) / 2.0) * math.sqrt(K_a))
        + 2.0 / P
        + math.log(B)
        - math.log(P_e)
    )
    S = K_a * math.log2(q) / q
    return M, S
