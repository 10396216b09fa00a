"""Orthogonal modulation over the SIMO quasi-static fading adder channel.

Codebook generation, one-hot modulation, per-slot matrix channel
simulation Y_i = sqrt(P) H X_i + Z_i, random pilot pools, and MMSE channel
estimation from the pilot observations.  Noise is CN(0,1) throughout; P is
the only SNR knob and E_b/N0 = n P / B.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemParams",
    "Codebook",
    "SlotMatrices",
    "ChannelEstimate",
    "generate_codebook",
    "codeword_for_message",
    "modulate",
    "demodulate",
    "simulate_slots",
    "generate_pilots",
    "assign_pilots",
    "pilot_collisions",
    "mmse_estimate",
    "write_frame_dump",
    "read_frame_dump",
]

MAX_MATERIALIZED_B = 12

_DUMP_MAGIC = b"COMA"
_DUMP_VERSION = 1


@dataclass(frozen=True)
class SystemParams:
    """Global system tuple; E_b/N0 is derived, never stored."""

    K_a: int
    q: int
    n: int
    M: int
    P: float
    B: int
    eps_target: float = 0.05

    def __post_init__(self):
        if min(self.K_a, self.q, self.n, self.M, self.B) < 1:
            raise ValueError("K_a, q, n, M, B must be >= 1")
        if self.P <= 0:
            raise ValueError("P must be positive")

    @property
    def ebn0(self) -> float:
        return self.n * self.P / self.B

    @property
    def ebn0_db(self) -> float:
        return 10.0 * math.log10(self.ebn0)


@dataclass(frozen=True)
class Codebook:
    """Common codebook: 2^B codewords of n q-ary symbols, i.i.d. uniform."""

    symbols: np.ndarray  # (2^B, n), entries in [0, q)
    q: int
    seed: int

    @property
    def n_messages(self) -> int:
        return self.symbols.shape[0]

    @property
    def n(self) -> int:
        return self.symbols.shape[1]


def generate_codebook(B: int, n: int, q: int, seed: int = 0) -> Codebook:
    """Materialize a random codebook (only feasible for B <= 12)."""
    if B > MAX_MATERIALIZED_B:
        raise ValueError(
            f"refusing to materialize 2^{B} codewords; use codeword_for_message"
        )
    rng = np.random.default_rng(seed)
    symbols = rng.integers(0, q, size=(2**B, n), dtype=np.int64)
    return Codebook(symbols=symbols, q=q, seed=seed)


def codeword_for_message(message: int, n: int, q: int, seed: int = 0) -> np.ndarray:
    """Lazy codeword generation: deterministic in (seed, message).

    Lets 2^B be astronomically large without ever materializing the table.
    Note: not row-compatible with generate_codebook (different stream
    layout); pick one mechanism per experiment.
    """
    rng = np.random.default_rng([seed, message])
    return rng.integers(0, q, size=n, dtype=np.int64)


def modulate(codeword: np.ndarray, q: int) -> np.ndarray:
    """q-ary symbols to the one-hot signal {0,1}^{n*q}, one 1 per block."""
    codeword = np.asarray(codeword)
    if codeword.size and (codeword.min() < 0 or codeword.max() >= q):
        raise ValueError("symbol out of range")
    n = codeword.shape[0]
    s = np.zeros((n, q))
    s[np.arange(n), codeword] = 1.0
    return s.reshape(-1)


def demodulate(signal: np.ndarray, q: int) -> np.ndarray:
    """Inverse of modulate: per-block argmax."""
    blocks = np.asarray(signal).reshape(-1, q)
    return blocks.argmax(axis=1)


@dataclass(frozen=True)
class SlotMatrices:
    """One frame of per-slot matrices for the model Y_i = sqrt(P) H X_i + Z_i.

    Y: (n, M, q) received; X: (n, K_a, q) binary row-one-hot;
    H: (M, K_a) quasi-static channels; Z: (n, M, q) noise.
    """

    Y: np.ndarray
    X: np.ndarray
    H: np.ndarray
    Z: np.ndarray
    P: float

    @property
    def n(self) -> int:
        return self.Y.shape[0]


def _crandn(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0,1) entries."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def simulate_slots(
    params: SystemParams,
    codewords: np.ndarray,
    H: np.ndarray | None = None,
    seed: int | np.random.Generator = 0,
    noiseless: bool = False,
) -> SlotMatrices:
    """Simulate one frame: n slot matrices under a common (quasi-static) H.

    codewords: (K_a, n) q-ary symbols.  H defaults to i.i.d. CN(0,1).
    noiseless=True sets Z = 0 for exactness checks.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    codewords = np.asarray(codewords)
    K_a, n = codewords.shape
    if K_a != params.K_a or n != params.n:
        raise ValueError("codewords shape must be (K_a, n)")
    if H is None:
        H = _crandn(rng, (params.M, K_a))
    X = np.zeros((n, K_a, params.q))
    X[np.arange(n)[:, None], np.arange(K_a)[None, :], codewords.T] = 1.0
    Z = np.zeros((n, params.M, params.q), dtype=complex)
    if not noiseless:
        Z = _crandn(rng, (n, params.M, params.q))
    Y = math.sqrt(params.P) * np.einsum("mk,nkq->nmq", H, X) + Z
    return SlotMatrices(Y=Y, X=X, H=H, Z=Z, P=params.P)


def generate_pilots(pool_size: int, n_p: int, seed: int = 0) -> np.ndarray:
    """Pool of constant-modulus random-phase pilots, ||phi||^2 = n_p exactly.

    Returns (pool_size, n_p) complex array.
    """
    if n_p < 1:
        raise ValueError("n_p must be >= 1")
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=(pool_size, n_p))
    return np.exp(1j * phases)


def assign_pilots(K_a: int, pool_size: int, seed: int = 0) -> np.ndarray:
    """Each user draws a pilot index uniformly; collisions are possible."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, pool_size, size=K_a)


def pilot_collisions(indices: np.ndarray) -> np.ndarray:
    """Boolean mask of users whose pilot index is shared with another user."""
    indices = np.asarray(indices)
    unique, counts = np.unique(indices, return_counts=True)
    shared = set(unique[counts > 1].tolist())
    return np.array([i in shared for i in indices])


@dataclass(frozen=True)
class ChannelEstimate:
    """Per-user MMSE channel estimates with isotropic error covariances.

    Hhat: (M, K_a); err_var[k] is the per-antenna error variance c_k, so
    the estimation-error covariance of user k is c_k * I_M.
    """

    Hhat: np.ndarray
    err_var: np.ndarray

    @property
    def K_a(self) -> int:
        return self.Hhat.shape[1]


def mmse_estimate(
    V_pilot: np.ndarray,
    pilots: np.ndarray,
    P: float,
) -> ChannelEstimate:
    """MMSE channel estimates from V_pilot = sum_k sqrt(P) h_k phi_k^T + Z.

    pilots: (K_a, n_p), the pilot sequence actually used by each user
    (duplicate rows model pilot collisions).  For i.i.d. CN(0,1) channels
    the per-user estimator is the scalar Wiener filter on the projected
    observation y_k = V_pilot conj(phi_k):

        hhat_k = sqrt(P) n_p / (P sum_k' |rho_k'k|^2 + n_p) * y_k

    with rho_k'k = phi_k'^T conj(phi_k); for orthogonal pilots this gives
    estimate variance P n_p/(P n_p + 1) and error variance 1/(P n_p + 1)
    per antenna.
    """
    pilots = np.asarray(pilots)
    rho = pilots @ pilots.conj().T  # rho[k', k] = phi_k'^T conj(phi_k)
    norm2 = np.real(np.diag(rho))  # ||phi_k||^2 (= n_p for phase pilots)
    denom = P * (np.abs(rho) ** 2).sum(axis=0) + norm2  # per user k
    proj = V_pilot @ pilots.conj().T  # (M, K_a), column k = V conj(phi_k)
    Hhat = math.sqrt(P) * norm2 / denom * proj
    err_var = 1.0 - P * norm2**2 / denom
    return ChannelEstimate(Hhat=Hhat, err_var=err_var)


def write_frame_dump(path, slots: SlotMatrices) -> None:
    """Debug dump of the received frame: 16-byte header + complex64 data.

    Header: magic "COMA", version u32, M u32, q u32 (little endian);
    payload: the n*M*q received entries, row-major, as float32 (re, im)
    pairs.
    """
    n, M, q = slots.Y.shape
    with open(path, "wb") as f:
        f.write(_DUMP_MAGIC)
        f.write(struct.pack("<III", _DUMP_VERSION, M, q))
        f.write(slots.Y.astype(np.complex64).tobytes())


def read_frame_dump(path) -> np.ndarray:
    """Read a frame dump back as an (n, M, q) complex64 array."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _DUMP_MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        version, M, q = struct.unpack("<III", f.read(12))
        if version != _DUMP_VERSION:
            raise ValueError(f"unsupported dump version {version}")
        data = np.frombuffer(f.read(), dtype=np.complex64)
    return data.reshape(-1, M, q)
