"""Config-driven sweep engine emitting deterministic CSV files.

A sweep is described by a line-oriented ``key = value`` config (grids as
comma-separated lists, ``#`` comments).  Each sweep kind reproduces one of
the figure pipelines: A-channel spectral-efficiency and E_b/N0 bounds,
MMV-AMP miss-rate simulation, full COMMA vs Gaussian-baseline
spectral-efficiency comparisons (perfect and estimated CSI), and the
matched-filter scaling law.  Rows are computed in deterministic grid
order; reruns with the same spec and seed are byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from comma import achannel, awgn_frontend, mf_detector, mimo_fbl, mmv_amp, ortho_mod

__all__ = [
    "SweepSpec",
    "SweepSummary",
    "ConfigError",
    "KINDS",
    "validate_config",
    "spec_to_config",
    "run_sweep",
    "write_csv",
    "PRESETS",
]

KINDS = (
    "achannel-seff",
    "achannel-ebn0",
    "amp-missrate",
    "comma-seff-perfect",
    "comma-seff-estimated",
    "mf-scaling",
    "mimo-fbl",
)


@dataclass(frozen=True)
class SweepSpec:
    """Full description of one sweep; every field has a documented default."""

    kind: str = "achannel-seff"
    seed: int = 0
    out: str = "sweep.csv"
    # system parameters
    q: int = 32
    n: int = 12
    B: int = 40
    M: int = 8
    P_db: float = 0.0
    eps: float = 0.05
    pmd_factor: float = 0.01  # threshold policy: target p_md = pmd_factor / n
    ka_list: tuple[int, ...] = (2, 4, 8)
    # detector / search knobs
    nfa_max: int = 4
    frames: int = 20
    trials: int = 1000
    mc_samples: int = 10_000
    gamma: float = 0.7
    max_iters: int = 50
    b_max: int = 1000
    n_max: int = 200
    p_db_min: float = -10.0
    p_db_max: float = 30.0
    L_pilots: int = 4
    pool_bits: int = 12

    @property
    def P(self) -> float:
        return 10.0 ** (self.P_db / 10.0)


@dataclass
class SweepSummary:
    rows: list[dict]
    n_ok: int
    n_infeasible: int
    n_failed: int
    out: str


class ConfigError(ValueError):
    """Raised by validate_config; .errors lists every problem found."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


_RANGES = {
    "eps": (lambda v: 0.0 < v < 1.0, "(0,1)"),
    "gamma": (lambda v: 0.0 < v <= 1.0, "(0,1]"),
    "pmd_factor": (lambda v: 0.0 < v < 1.0, "(0,1)"),
    "seed": (lambda v: v >= 0, ">= 0"),
    "q": (lambda v: v >= 1, ">= 1"),
    "n": (lambda v: v >= 1, ">= 1"),
    "B": (lambda v: v >= 1, ">= 1"),
    "M": (lambda v: v >= 1, ">= 1"),
    "nfa_max": (lambda v: v >= 0, ">= 0"),
    "frames": (lambda v: v >= 1, ">= 1"),
    "trials": (lambda v: v >= 1, ">= 1"),
    "mc_samples": (lambda v: v >= 1, ">= 1"),
    "max_iters": (lambda v: v >= 1, ">= 1"),
    "b_max": (lambda v: v >= 1, ">= 1"),
    "n_max": (lambda v: v >= 1, ">= 1"),
    "L_pilots": (lambda v: v >= 1, ">= 1"),
    "pool_bits": (lambda v: v >= 1, ">= 1"),
}


def validate_config(text: str) -> SweepSpec:
    """Parse a key=value config; raise ConfigError listing every problem."""
    spec_fields = {f.name: f for f in fields(SweepSpec)}
    values: dict = {}
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {raw!r}")
            continue
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in spec_fields:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        ftype = spec_fields[key].type
        try:
            if key == "ka_list":
                parsed: object = tuple(int(x.strip()) for x in val.split(","))
            elif ftype == "int":
                parsed = int(val)
            elif ftype == "float":
                parsed = float(val)
            else:
                parsed = val
        except ValueError:
            errors.append(f"line {lineno}: cannot parse {key} value {val!r} as {ftype}")
            continue
        if key == "kind" and parsed not in KINDS:
            errors.append(f"line {lineno}: kind must be one of {', '.join(KINDS)}")
            continue
        if key in _RANGES:
            ok, rng = _RANGES[key]
            if not ok(parsed):
                errors.append(f"line {lineno}: {key} = {val} violates range {rng}")
                continue
        if key == "ka_list" and (not parsed or any(k < 1 for k in parsed)):
            errors.append(f"line {lineno}: ka_list entries must be >= 1")
            continue
        values[key] = parsed
    if errors:
        raise ConfigError(errors)
    return SweepSpec(**values)


def spec_to_config(spec: SweepSpec) -> str:
    """Emit a spec as config text; validate_config round-trips it."""
    lines = []
    for f in fields(SweepSpec):
        v = getattr(spec, f.name)
        if f.name == "ka_list":
            v = ",".join(str(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(rows: list[dict], path: str) -> None:
    """Header line, comma separator, 17 significant digits, status last."""
    cols: list[str] = []
    for row in rows:
        for c in row:
            if c not in cols and c != "status":
                cols.append(c)
    cols.append("status")
    with open(path, "w", newline="") as f:
        f.write(",".join(cols) + "\n")
        for row in rows:
            f.write(",".join(_fmt(row.get(c, "")) for c in cols) + "\n")


# ---------------------------------------------------------------------------
# sweep kinds
# ---------------------------------------------------------------------------


def _theorem2_value(spec: SweepSpec, K_a: int, B: int, P: float, zero_pfa: bool) -> float:
    """Theorem-2 style PUPE bound under the p_md = pmd_factor/n policy."""
    target_pmd = spec.pmd_factor / spec.n
    theta = awgn_frontend.solve_threshold(target_pmd, P, K_a, spec.q)
    rates = awgn_frontend.frontend_rates(
        awgn_frontend.ThresholdConfig(theta, P, K_a, spec.q)
    )
    p_fa = 0.0 if zero_pfa else rates.p_fa
    params = achannel.AChannelParams(K_a, spec.q, spec.n, B, p_fa)
    eps_ach = achannel.theorem1_bound(params, spec.mc_samples, seed=spec.seed).value
    npmd = spec.n * rates.p_md
    return min(1.0, npmd + (1.0 - npmd) * eps_ach)


def _max_feasible_b(spec: SweepSpec, K_a: int, P: float, zero_pfa: bool) -> int | None:
    """Largest payload B <= b_max with the bound <= eps.

    The bound is decreasing in B only through the deterministic collision
    term C(K_a,2)/2^B, so the search starts above the B where that term is
    negligible; beyond it the bound grows with B and bisection applies.
    """
    lo = max(
        1,
        math.ceil(math.log2(K_a)),  # bound needs 2^B >= K_a
        math.ceil(math.log2(math.comb(K_a, 2) / (0.5 * spec.eps))) if K_a > 1 else 1,
    )
    hi = spec.b_max
    if lo > hi:
        return None
    if _theorem2_value(spec, K_a, lo, P, zero_pfa) > spec.eps:
        return None
    if _theorem2_value(spec, K_a, hi, P, zero_pfa) <= spec.eps:
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _theorem2_value(spec, K_a, mid, P, zero_pfa) <= spec.eps:
            lo = mid
        else:
            hi = mid
    return lo


def _sweep_achannel_seff(spec: SweepSpec) -> list[dict]:
    rows = []
    for K_a in spec.ka_list:
        for mode in ("pfa_zero", "pfa_threshold"):
            row = {
                "K_a": K_a,
                "mode": mode,
                "q": spec.q,
                "n": spec.n,
                "P_db": spec.P_db,
                "eps": spec.eps,
            }
            if K_a >= spec.q:
                row.update(B=0, S_eff=0.0, status="infeasible")
                rows.append(row)
                continue
            B = _max_feasible_b(spec, K_a, spec.P, mode == "pfa_zero")
            if B is None:
                row.update(B=0, S_eff=0.0, status="infeasible")
            else:
                row.update(B=B, S_eff=K_a * B / (spec.n * spec.q), status="ok")
            rows.append(row)
    return rows


def _min_feasible_p_db(spec: SweepSpec, K_a: int, zero_pfa: bool) -> float | None:
    """Smallest power (0.1 dB grid) with the Theorem-2 bound <= eps."""
    grid = np.arange(spec.p_db_min, spec.p_db_max + 1e-9, 0.1)
    lo, hi = 0, len(grid) - 1
    if _theorem2_value(spec, K_a, spec.B, 10 ** (grid[hi] / 10), zero_pfa) > spec.eps:
        return None
    if _theorem2_value(spec, K_a, spec.B, 10 ** (grid[lo] / 10), zero_pfa) <= spec.eps:
        return float(grid[lo])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _theorem2_value(spec, K_a, spec.B, 10 ** (grid[mid] / 10), zero_pfa) <= spec.eps:
            hi = mid
        else:
            lo = mid
    return float(grid[hi])


def _sweep_achannel_ebn0(spec: SweepSpec) -> list[dict]:
    rows = []
    n_tot = spec.n * spec.q
    for K_a in spec.ka_list:
        row = {"K_a": K_a, "scheme": "comma-bound", "B": spec.B, "n": spec.n, "q": spec.q}
        p_db = None if K_a >= spec.q else _min_feasible_p_db(spec, K_a, zero_pfa=False)
        if p_db is None:
            row.update(ebn0_db=math.nan, status="infeasible")
        else:
            ebn0 = spec.n * 10 ** (p_db / 10) / spec.B
            row.update(ebn0_db=10 * math.log10(ebn0), status="ok")
        rows.append(row)
        aloha = awgn_frontend.aloha_ebn0(
            K_a,
            spec.B,
            n_tot,
            spec.eps,
            p_db_grid=np.arange(spec.p_db_min, spec.p_db_max + 1e-9, 0.1),
        )
        row = {"K_a": K_a, "scheme": "aloha", "B": spec.B, "n": spec.n, "q": spec.q}
        if aloha is None:
            row.update(ebn0_db=math.nan, status="infeasible")
        else:
            row.update(ebn0_db=aloha, status="ok")
        rows.append(row)
    return rows


@dataclass
class _DetectionStats:
    """Slot-level MMV-AMP detection statistics for each list size."""

    p_miss_slot: np.ndarray  # per N_fa in 0..nfa_max
    p_miss_frame: np.ndarray  # at least one of n slots missed
    induced_p_fa: np.ndarray
    user_slots: int


def _simulate_detection(spec: SweepSpec, K_a: int, estimated_csi: bool) -> _DetectionStats:
    """Measure miss/false-alarm statistics of MMV-AMP candidate lists.

    Lists for all N_fa in 0..nfa_max come from the same posteriors (common
    random numbers), so the miss rate is non-increasing in N_fa by
    construction.  With estimated CSI the AMP runs on the pilot-based MMSE
    estimate; pilot collisions mark every slot of the colliding users as
    missed (conservative).
    """
    rng = np.random.default_rng([spec.seed, K_a, int(estimated_csi)])
    cfg = mmv_amp.AmpConfig(max_iters=spec.max_iters, damping=spec.gamma)
    n_sizes = spec.nfa_max + 1
    miss_slot = np.zeros(n_sizes)
    miss_frame = np.zeros(n_sizes)
    wrong = np.zeros(n_sizes)
    params = ortho_mod.SystemParams(
        K_a=K_a, q=spec.q, n=spec.n, M=spec.M, P=spec.P, B=spec.B, eps_target=spec.eps
    )
    pool = None
    if estimated_csi:
        pool = rng.integers(0, spec.q, size=(2**spec.pool_bits, spec.L_pilots))
    for _ in range(spec.frames):
        codewords = rng.integers(0, spec.q, size=(K_a, spec.n))
        slots = ortho_mod.simulate_slots(params, codewords, seed=rng)
        H_det = slots.H
        collided = np.zeros(K_a, dtype=bool)
        if estimated_csi:
            idx = rng.integers(0, pool.shape[0], size=K_a)
            collided = ortho_mod.pilot_collisions(idx)
            pilot_sig = np.zeros((K_a, spec.L_pilots * spec.q))
            for k in range(K_a):
                pilot_sig[k] = ortho_mod.modulate(pool[idx[k]], spec.q)
            Zp = ortho_mod._crandn(rng, (spec.M, spec.L_pilots * spec.q))
            V_pilot = math.sqrt(spec.P) * slots.H @ pilot_sig + Zp
            H_det = ortho_mod.mmse_estimate(V_pilot, pilot_sig, spec.P).Hhat
        frame_missed = np.zeros((n_sizes, K_a), dtype=bool)
        for i in range(spec.n):
            state = mmv_amp.amp_detect(slots.Y[i], H_det, spec.P, cfg)
            lists = mmv_amp.top_candidates(state, spec.nfa_max)
            hit_rank = np.argmax(lists.symbols == codewords[:, i][:, None], axis=1)
            has_hit = (lists.symbols == codewords[:, i][:, None]).any(axis=1)
            for j in range(n_sizes):
                hit_j = has_hit & (hit_rank <= j)
                missed = ~hit_j | collided
                miss_slot[j] += missed.sum()
                frame_missed[j] |= missed
                wrong[j] += (1 + j) * K_a - hit_j.sum()
        miss_frame += frame_missed.sum(axis=1)
    user_slots = spec.frames * spec.n * K_a
    return _DetectionStats(
        p_miss_slot=miss_slot / user_slots,
        p_miss_frame=miss_frame / (spec.frames * K_a),
        induced_p_fa=np.minimum(wrong / user_slots / max(spec.q - 1, 1), 1.0),
        user_slots=user_slots,
    )


def _sweep_amp_missrate(spec: SweepSpec) -> list[dict]:
    rows = []
    for K_a in spec.ka_list:
        stats = _simulate_detection(spec, K_a, estimated_csi=False)
        for nfa in range(spec.nfa_max + 1):
            rows.append(
                {
                    "K_a": K_a,
                    "N_fa": nfa,
                    "q": spec.q,
                    "n": spec.n,
                    "M": spec.M,
                    "P_db": spec.P_db,
                    "p_miss_slot": float(stats.p_miss_slot[nfa]),
                    "p_miss_frame": float(stats.p_miss_frame[nfa]),
                    "induced_p_fa": float(stats.induced_p_fa[nfa]),
                    "user_slots": stats.user_slots,
                    "status": "ok",
                }
            )
    return rows


def _min_outer_blocklength(
    spec: SweepSpec, p_miss_slot: float, p_fa: float
) -> int | None:
    """Smallest outer blocklength n with n*p_md + single-user bound <= eps."""
    for n in range(1, spec.n_max + 1):
        budget = spec.eps - n * p_miss_slot
        if budget <= 0:
            return None
        params = achannel.AChannelParams(K_a=1, q=spec.q, n=n, B=spec.B, p_fa=p_fa)
        bound = achannel.theorem1_bound(params, spec.mc_samples, seed=spec.seed)
        if bound.value <= budget:
            return n
    return None


def _sweep_comma_seff(spec: SweepSpec, estimated_csi: bool) -> list[dict]:
    rows = []
    pilot_overhead = spec.L_pilots * spec.q if estimated_csi else 0
    for K_a in spec.ka_list:
        stats = _simulate_detection(spec, K_a, estimated_csi)
        best = None  # (n_tot, nfa, n_outer)
        for nfa in range(spec.nfa_max + 1):
            n_outer = _min_outer_blocklength(
                spec, float(stats.p_miss_slot[nfa]), float(stats.induced_p_fa[nfa])
            )
            if n_outer is None:
                continue
            n_tot = n_outer * spec.q + pilot_overhead
            if best is None or n_tot < best[0]:
                best = (n_tot, nfa, n_outer)
        row = {
            "K_a": K_a,
            "scheme": "comma",
            "q": spec.q,
            "M": spec.M,
            "B": spec.B,
            "P_db": spec.P_db,
            "csi": "estimated" if estimated_csi else "perfect",
        }
        if best is None:
            row.update(N_fa=-1, n_outer=0, n_tot=0, S_eff=0.0, status="infeasible")
        else:
            n_tot, nfa, n_outer = best
            row.update(
                N_fa=nfa,
                n_outer=n_outer,
                n_tot=n_tot,
                S_eff=K_a * spec.B / n_tot,
                status="ok",
            )
        rows.append(row)
        # Gaussian-signaling linear-MUD baseline at matched energy per pulse
        n_p = spec.L_pilots * spec.q if estimated_csi else 0
        n_tot_g = mimo_fbl.min_blocklength_gaussian(
            K_a,
            spec.M,
            spec.P / spec.q,
            spec.B,
            spec.eps,
            n_range=(n_p + 1, spec.n_max * spec.q + n_p),
            n_p=n_p,
            trials=spec.trials,
            seed=spec.seed,
        )
        row = dict(row)
        row["scheme"] = "gaussian-mud"
        if n_tot_g is None:
            row.update(N_fa=-1, n_outer=0, n_tot=0, S_eff=0.0, status="infeasible")
        else:
            row.update(
                N_fa=-1,
                n_outer=0,
                n_tot=n_tot_g,
                S_eff=K_a * spec.B / n_tot_g,
                status="ok",
            )
        rows.append(row)
    return rows


def _sweep_mf_scaling(spec: SweepSpec) -> list[dict]:
    rows = []
    for K_a in spec.ka_list:
        M_req, S = mf_detector.scaling_law_antennas(K_a, spec.q, spec.P, spec.B, spec.eps)
        bound = mf_detector.theorem3_bound(K_a, spec.q, spec.M, spec.P, spec.n, spec.eps)
        rows.append(
            {
                "K_a": K_a,
                "q": spec.q,
                "P_db": spec.P_db,
                "B": spec.B,
                "P_e": spec.eps,
                "M_required": M_req,
                "S": S,
                "theorem3_at_M": bound,
                "status": "ok",
            }
        )
    return rows


def _sweep_mimo_fbl(spec: SweepSpec) -> list[dict]:
    rows = []
    for K_a in spec.ka_list:
        n_tot = mimo_fbl.min_blocklength_gaussian(
            K_a,
            spec.M,
            spec.P / spec.q,
            spec.B,
            spec.eps,
            n_range=(1, spec.n_max * spec.q),
            trials=spec.trials,
            seed=spec.seed,
        )
        row = {"K_a": K_a, "scheme": "gaussian-mud", "M": spec.M, "B": spec.B, "q": spec.q}
        if n_tot is None:
            row.update(n_tot=0, S_eff=0.0, status="infeasible")
        else:
            row.update(n_tot=n_tot, S_eff=K_a * spec.B / n_tot, status="ok")
        rows.append(row)
    return rows


_DISPATCH = {
    "achannel-seff": _sweep_achannel_seff,
    "achannel-ebn0": _sweep_achannel_ebn0,
    "amp-missrate": _sweep_amp_missrate,
    "comma-seff-perfect": lambda s: _sweep_comma_seff(s, estimated_csi=False),
    "comma-seff-estimated": lambda s: _sweep_comma_seff(s, estimated_csi=True),
    "mf-scaling": _sweep_mf_scaling,
    "mimo-fbl": _sweep_mimo_fbl,
}


def run_sweep(spec: SweepSpec, out: str | None = None) -> SweepSummary:
    """Run the sweep, write its CSV, and summarize row statuses.

    Per-row failures are recorded in the status column; the sweep itself
    never aborts on an infeasible grid point.
    """
    if spec.kind not in _DISPATCH:
        raise ConfigError([f"unknown sweep kind {spec.kind!r}"])
    rows = []
    for row in _DISPATCH[spec.kind](spec):
        rows.append(row)
    path = out or spec.out
    write_csv(rows, path)
    n_ok = sum(r["status"] == "ok" for r in rows)
    n_inf = sum(r["status"] == "infeasible" for r in rows)
    return SweepSummary(
        rows=rows,
        n_ok=n_ok,
        n_infeasible=n_inf,
        n_failed=len(rows) - n_ok - n_inf,
        out=path,
    )


PRESETS: dict[str, str] = {
    # Desk-scale presets run in minutes on one core.
    "desk-amp": (
        "kind = amp-missrate\nq = 32\nn = 12\nM = 8\nP_db = 8\n"
        "ka_list = 4,8,12,16\nnfa_max = 4\nframes = 20\n"
    ),
    "desk-seff": (
        "kind = comma-seff-perfect\nq = 32\nn = 12\nM = 8\nB = 40\nP_db = 8\n"
        "ka_list = 8,16,24,32\nnfa_max = 4\nframes = 20\nn_max = 60\n"
    ),
    "desk-seff-csi": (
        "kind = comma-seff-estimated\nq = 32\nn = 12\nM = 8\nB = 40\nP_db = 8\n"
        "ka_list = 8,16,24,32\nnfa_max = 4\nframes = 20\nn_max = 60\nL_pilots = 4\n"
        "pool_bits = 16\n"
    ),
    # Paper-scale presets; long-running (tens of minutes).
    "paper-fig1": (
        "kind = achannel-seff\nq = 256\nn = 117\nP_db = 15\npmd_factor = 0.01\n"
        "eps = 0.05\nb_max = 2000\n"
        "ka_list = 10,20,30,40,50,60,70,80,90,100,110\n"
    ),
    "paper-fig2": (
        "kind = achannel-ebn0\nq = 256\nn = 117\nB = 200\npmd_factor = 0.01\n"
        "eps = 0.05\nka_list = 5,10,15,17,20,30,50,70,90\n"
    ),
    "paper-fig3": (
        "kind = amp-missrate\nq = 128\nn = 23\nM = 25\nP_db = -1.5490195998574319\n"
        "ka_list = 50,100,150,200\nnfa_max = 4\nframes = 20\n"
    ),
}
