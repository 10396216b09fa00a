"""Config parsing, CSV output, determinism, and the command-line front end."""

import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from comma.experiments import (
    KINDS,
    PRESETS,
    ConfigError,
    SweepSpec,
    run_sweep,
    spec_to_config,
    validate_config,
    write_csv,
)


def test_validate_config_defaults():
    spec = validate_config("")
    assert spec == SweepSpec()


def test_validate_config_parses_all_field_kinds():
    spec = validate_config(
        "kind = amp-missrate\n"
        "seed = 3\n"
        "P_db = -1.5\n"
        "ka_list = 2, 4, 8\n"
        "out = result.csv\n"
        "# trailing comment line\n"
        "gamma = 0.5  # inline comment\n"
    )
    assert spec.kind == "amp-missrate"
    assert spec.seed == 3
    assert spec.P_db == -1.5
    assert spec.ka_list == (2, 4, 8)
    assert spec.out == "result.csv"
    assert spec.gamma == 0.5


def test_validate_config_collects_all_errors_with_line_numbers():
    bad = "kind = nonsense\nbogus_key = 1\nno equals sign\neps = 2.0\nq = -3\n"
    with pytest.raises(ConfigError) as exc:
        validate_config(bad)
    msgs = exc.value.errors
    assert len(msgs) == 5
    for lineno, frag in [(1, "kind"), (2, "bogus_key"), (3, "key = value"),
                         (4, "eps"), (5, "q")]:
        assert any(m.startswith(f"line {lineno}:") and frag in m for m in msgs)


def test_validate_config_type_errors():
    with pytest.raises(ConfigError) as exc:
        validate_config("seed = abc\nka_list = 1,x\n")
    assert len(exc.value.errors) == 2


@given(
    seed=st.integers(0, 2**31),
    q=st.integers(2, 512),
    n=st.integers(1, 300),
    P_db=st.floats(-20, 30, allow_nan=False),
    eps=st.floats(0.001, 0.5),
    gamma=st.floats(0.05, 1.0),
    kind=st.sampled_from(KINDS),
    ka=st.lists(st.integers(1, 200), min_size=1, max_size=6),
)
@settings(max_examples=60, deadline=None)
def test_config_round_trip(seed, q, n, P_db, eps, gamma, kind, ka):
    spec = SweepSpec(
        kind=kind, seed=seed, q=q, n=n, P_db=P_db, eps=eps, gamma=gamma,
        ka_list=tuple(ka),
    )
    assert validate_config(spec_to_config(spec)) == spec


def test_presets_all_valid():
    for name, text in PRESETS.items():
        spec = validate_config(text)
        assert spec.kind in KINDS, name


def test_write_csv_format(tmp_path):
    rows = [
        {"K_a": 2, "value": 1.0 / 3.0, "status": "ok"},
        {"K_a": 4, "extra": 7, "status": "infeasible"},
    ]
    path = tmp_path / "out.csv"
    write_csv(rows, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "K_a,value,extra,status"  # status always last
    assert lines[1].startswith("2,0.33333333333333331,")
    assert lines[1].endswith(",ok")
    assert lines[2] == "4,,7,infeasible"


def test_run_sweep_deterministic_bytes(tmp_path):
    spec = validate_config(
        "kind = amp-missrate\nq = 16\nn = 4\nM = 4\nP_db = 6\n"
        "ka_list = 2,4\nnfa_max = 2\nframes = 3\n"
    )
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_sweep(spec, out=str(a))
    run_sweep(spec, out=str(b))
    assert a.read_bytes() == b.read_bytes()


def test_run_sweep_mf_scaling(tmp_path):
    spec = validate_config("kind = mf-scaling\nq = 32\nka_list = 10,100\nB = 128\n")
    summary = run_sweep(spec, out=str(tmp_path / "mf.csv"))
    assert summary.n_ok == 2
    m = {r["K_a"]: r["M_required"] for r in summary.rows}
    assert m[100] > m[10]


def test_run_sweep_achannel_seff_small(tmp_path):
    spec = validate_config(
        "kind = achannel-seff\nq = 16\nn = 6\nP_db = 14\nka_list = 2,20\n"
        "b_max = 40\nmc_samples = 500\n"
    )
    summary = run_sweep(spec, out=str(tmp_path / "se.csv"))
    rows = {(r["K_a"], r["mode"]): r for r in summary.rows}
    # K_a >= q is structurally infeasible for the bound
    assert rows[(20, "pfa_zero")]["status"] == "infeasible"
    ok = rows[(2, "pfa_zero")]
    assert ok["status"] == "ok" and ok["S_eff"] > 0


def test_run_sweep_unknown_kind():
    spec = SweepSpec(kind="achannel-seff")
    object.__setattr__(spec, "kind", "nope")
    with pytest.raises(ConfigError):
        run_sweep(spec, out="/dev/null")


def _cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "comma.cli", *args],
        capture_output=True,
        text=True,
    )


def test_cli_requires_config_or_preset():
    res = _cli("sim-amp")
    assert res.returncode == 1
    assert "provide --config or --preset" in res.stderr


def test_cli_config_error_exit_code(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("eps = 5\n")
    res = _cli("sim-amp", "--config", str(cfg))
    assert res.returncode == 1
    assert "config error" in res.stderr


def test_cli_missing_file():
    res = _cli("sim-amp", "--config", "/nonexistent/x.cfg")
    assert res.returncode == 1


def test_cli_kind_mismatch(tmp_path):
    cfg = tmp_path / "mismatch.cfg"
    cfg.write_text("kind = mf-scaling\n")
    res = _cli("sim-amp", "--config", str(cfg))
    assert res.returncode == 1
    assert "does not match subcommand" in res.stderr


def test_cli_runs_small_sweep(tmp_path):
    cfg = tmp_path / "ok.cfg"
    out = tmp_path / "ok.csv"
    cfg.write_text(
        "q = 16\nn = 4\nM = 4\nP_db = 6\nka_list = 2\nnfa_max = 1\nframes = 2\n"
    )
    res = _cli("sim-amp", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 0, res.stderr
    assert out.exists()
    header = out.read_text().splitlines()[0]
    assert header.endswith(",status")


def test_cli_seed_override_changes_output(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text(
        "q = 16\nn = 4\nM = 4\nP_db = 3\nka_list = 4\nnfa_max = 1\nframes = 3\n"
    )
    outs = []
    for seed in (1, 2):
        out = tmp_path / f"s{seed}.csv"
        res = _cli("sim-amp", "--config", str(cfg), "--seed", str(seed), "--out", str(out))
        assert res.returncode == 0
        outs.append(out.read_bytes())
    assert outs[0] != outs[1]
