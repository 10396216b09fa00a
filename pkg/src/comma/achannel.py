"""Noisy unsourced A-channel: cardinality laws, achievability bound, oracles.

The A-channel outputs, per channel use, the set of distinct transmitted
symbols; "noise" inserts each absent symbol independently with probability
p_fa.  This module evaluates the random-coding achievability bound on the
per-user probability of error (PUPE) for K_a users sharing a common
codebook, plus a brute-force joint decoder usable as an oracle at tiny
codebook sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import binom

__all__ = [
    "AChannelParams",
    "AChannelObservation",
    "BoundResult",
    "PupeEstimate",
    "stirling2_log",
    "input_cardinality_law",
    "output_cardinality_law",
    "theorem1_bound",
    "min_blocklength_for_rate",
    "simulate_achannel",
    "brute_force_pupe",
]

# Largest codebook brute_force_pupe will enumerate.
MAX_ENUMERABLE_MESSAGES = 2**12


@dataclass(frozen=True)
class AChannelParams:
    """System tuple for the q-ary A-channel with K_a users.

    p_fa is the per-symbol insertion probability of the noisy channel;
    p_fa = 0 recovers the classical noiseless A-channel.
    """

    K_a: int
    q: int
    n: int
    B: int
    p_fa: float = 0.0

    def __post_init__(self):
        if self.K_a < 1 or self.q < 1 or self.n < 1 or self.B < 1:
            raise ValueError("K_a, q, n, B must all be >= 1")
        if not 0.0 <= self.p_fa <= 1.0:
            raise ValueError(f"p_fa must be in [0,1], got {self.p_fa}")

    def require_bound_assumptions(self):
        """The achievability bound needs q > K_a and 2^B >= K_a."""
        if self.q <= self.K_a:
            raise ValueError(f"bound requires q > K_a (q={self.q}, K_a={self.K_a})")
        if 2**self.B < self.K_a:
            raise ValueError("bound requires 2^B >= K_a")


@dataclass(frozen=True)
class AChannelObservation:
    """Length-n A-channel output, stored as an (n, q) boolean membership table."""

    membership: np.ndarray

    def __post_init__(self):
        if self.membership.ndim != 2 or self.membership.dtype != bool:
            raise ValueError("membership must be an (n, q) boolean array")

    @property
    def n(self) -> int:
        return self.membership.shape[0]

    @property
    def q(self) -> int:
        return self.membership.shape[1]

    def slot_sets(self) -> list[set[int]]:
        """Slots as sets of 0-based symbol indices."""
        return [set(np.flatnonzero(row)) for row in self.membership]

    def cardinalities(self) -> np.ndarray:
        return self.membership.sum(axis=1)


@dataclass(frozen=True)
class BoundResult:
    """Monte-Carlo estimate of a probability bound with its standard error."""

    value: float
    stderr: float

    @property
    def half_width(self) -> float:
        """2-sigma confidence half-width."""
        return 2.0 * self.stderr


@dataclass(frozen=True)
class PupeEstimate:
    pupe: float
    stderr: float
    trials: int


@lru_cache(maxsize=64)
def _stirling2_log_row(k: int) -> np.ndarray:
    """ln S(k, eta) for eta = 0..k, via the log-domain recurrence."""
    row = np.array([0.0])  # S(0,0) = 1
    for m in range(1, k + 1):
        prev = np.append(row, -np.inf)  # prev[eta] = ln S(m-1, eta)
        etas = np.arange(1, m + 1)
        new = np.full(m + 1, -np.inf)
        # S(m, eta) = eta * S(m-1, eta) + S(m-1, eta-1)
        new[1:] = np.logaddexp(np.log(etas) + prev[1 : m + 1], prev[0:m])
        row = new
    return row


def stirling2_log(k: int, eta: int) -> float:
    """ln of the Stirling number of the second kind S(k, eta)."""
    if k < 0 or eta < 0:
        raise ValueError("k and eta must be nonnegative")
    if eta > k:
        raise ValueError(f"eta={eta} exceeds k={k}")
    return float(_stirling2_log_row(k)[eta])


def input_cardinality_law(params: AChannelParams) -> np.ndarray:
    """Distribution of |union of K_a uniform q-ary symbols|.

    Returns p_in over eta = 1..min(q, K_a); index i holds eta = i+1.
    p_in(eta) = q! S(K_a, eta) / ((q-eta)! q^K_a), computed in log domain.
    """
    K_a, q = params.K_a, params.q
    eta_max = min(q, K_a)
    etas = np.arange(1, eta_max + 1)
    srow = _stirling2_log_row(K_a)
    log_p = (
        math.lgamma(q + 1)
        - np.array([math.lgamma(q - e + 1) for e in etas])
        + srow[etas]
        - K_a * math.log(q)
    )
    return np.exp(log_p)


def output_cardinality_law(params: AChannelParams) -> np.ndarray:
    """Distribution of the output-set cardinality |y| under insertion noise.

    Returns p_out over j = 1..q; index i holds j = i+1.
    p_out(j) = sum_{eta<=min(j,K_a)} p_in(eta) * Bino(j-eta; q-eta, p_fa).
    The unnormalized sum already totals 1 (insertion counts are binomial
    conditionally on eta), so no extra normalizer is applied.
    """
    q, p_fa = params.q, params.p_fa
    p_in = input_cardinality_law(params)
    etas = np.arange(1, len(p_in) + 1)
    js = np.arange(1, q + 1)
    # pmf[e_idx, j_idx] = Bino(j - eta; q - eta, p_fa)
    pmf = binom.pmf(js[None, :] - etas[:, None], q - etas[:, None], p_fa)
    return p_in @ pmf


def _log_binom_big(total: int, choose: int) -> float:
    """ln C(total, choose) for arbitrarily large integer total."""
    if choose < 0 or choose > total:
        return -np.inf
    acc = -math.lgamma(choose + 1)
    for i in range(choose):
        acc += math.log(total - i)
    return acc


def theorem1_bound(
    params: AChannelParams,
    mc_samples: int = 10_000,
    seed: int = 0,
) -> BoundResult:
    """Achievability bound on the PUPE of the noisy unsourced A-channel.

    The expectation over the multinomial slot-cardinality histogram A is
    estimated with mc_samples draws of A ~ Multinomial(n, p_out); the
    binomial coefficients and (j/q)^{l A_j} products are evaluated in log
    domain with the min{1, .} clamp applied per sample.
    """
    params.require_bound_assumptions()
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    K_a, q, n, B = params.K_a, params.q, params.n, params.B

    p_out = output_cardinality_law(params)
    p_out = p_out / p_out.sum()
    rng = np.random.default_rng(seed)
    A = rng.multinomial(n, p_out, size=mc_samples)  # (S, q)
    log_jq = np.log(np.arange(1, q + 1) / q)  # ln(j/q); last entry 0
    base = A @ log_jq  # (S,)

    ells = np.arange(1, K_a + 1)
    n_codes = 2**B - K_a  # exact python int; B may be large
    log_c = np.array([_log_binom_big(n_codes, int(l)) for l in ells])
    coef = ells / (K_a + ells)
    coef[-1] = 1.0  # the l = K_a term enters with unit coefficient

    log_terms = log_c[:, None] + ells[:, None] * base[None, :]  # (K_a, S)
    per_sample = coef @ np.exp(np.minimum(0.0, log_terms))  # (S,)

    collision = math.comb(K_a, 2) / 2**B
    mean = float(per_sample.mean()) + collision
    stderr = float(per_sample.std(ddof=1) / math.sqrt(mc_samples)) if mc_samples > 1 else 0.0
    return BoundResult(value=min(max(mean, 0.0), 1.0), stderr=stderr)


def min_blocklength_for_rate(
    K_a: int,
    q: int,
    B: int,
    p_fa: float,
    eps_target: float,
    n_range: tuple[int, int],
    mc_samples: int = 10_000,
    seed: int = 0,
) -> int | None:
    """Smallest n in n_range with theorem1_bound <= eps_target, or None.

    Bisects assuming the bound is non-increasing in n (common random
    numbers via a fixed seed), then linearly verifies +-1 around the
    answer.
    """
    lo, hi = n_range
    if lo > hi or lo < 1:
        raise ValueError(f"invalid search range {n_range}")

    def feasible(n: int) -> bool:
        p = AChannelParams(K_a=K_a, q=q, n=n, B=B, p_fa=p_fa)
        return theorem1_bound(p, mc_samples=mc_samples, seed=seed).value <= eps_target

    if not feasible(hi):
        return None
    if feasible(lo):
        return lo
    # invariant: lo infeasible, hi feasible
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    # monotonicity guard: verify the boundary pair
    if hi - 1 >= n_range[0] and feasible(hi - 1):
        hi -= 1
    return hi


def simulate_achannel(
    codewords: np.ndarray,
    q: int,
    p_fa: float,
    seed: int | np.random.Generator = 0,
) -> AChannelObservation:
    """Pass K_a codewords through the insertion-noise A-channel.

    codewords: (K_a, n) integer array with entries in [0, q).  Slot t
    contains the union of transmitted symbols plus each absent symbol
    independently with probability p_fa.
    """
    codewords = np.asarray(codewords)
    if codewords.ndim != 2:
        raise ValueError("codewords must be (K_a, n)")
    if codewords.size and (codewords.min() < 0 or codewords.max() >= q):
        raise ValueError("codeword symbols out of range")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = codewords.shape[1]
    membership = np.zeros((n, q), dtype=bool)
    for k in range(codewords.shape[0]):
        membership[np.arange(n), codewords[k]] = True
    if p_fa > 0:
        inserts = rng.random((n, q)) < p_fa
        membership |= inserts
    return AChannelObservation(membership=membership)


def brute_force_pupe(
    codebook: np.ndarray,
    K_a: int,
    q: int,
    p_fa: float,
    trials: int,
    seed: int = 0,
) -> PupeEstimate:
    """Empirical PUPE of the set-consistency joint decoder (tiny codebooks).

    The decoder scores every codeword by the number of slots whose observed
    set contains the codeword symbol, outputs the K_a best (ties to the
    lowest message index), and a user is in error when its message is
    missing from the output or collides with another user's.
    """
    codebook = np.asarray(codebook)
    n_msgs, n = codebook.shape
    if n_msgs > MAX_ENUMERABLE_MESSAGES:
        raise ValueError(
            f"codebook with {n_msgs} messages exceeds the enumerable "
            f"limit {MAX_ENUMERABLE_MESSAGES}"
        )
    rng = np.random.default_rng(seed)
    slot_idx = np.arange(n)
    errors = np.empty(trials)
    for t in range(trials):
        msgs = rng.integers(0, n_msgs, size=K_a)
        obs = simulate_achannel(codebook[msgs], q, p_fa, seed=rng)
        # consistency score of every codeword against the observed sets
        scores = obs.membership[slot_idx[None, :], codebook].sum(axis=1)
        order = np.lexsort((np.arange(n_msgs), -scores))
        decoded = set(order[:K_a].tolist())
        unique, counts = np.unique(msgs, return_counts=True)
        collided = set(unique[counts > 1].tolist())
        bad = sum((m in collided) or (m not in decoded) for m in msgs)
        errors[t] = bad / K_a
    pupe = float(errors.mean())
    stderr = float(errors.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return PupeEstimate(pupe=pupe, stderr=stderr, trials=trials)
