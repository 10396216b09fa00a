"""Modulation, slot simulation, pilots, MMSE estimation, frame dumps."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from comma.ortho_mod import (
    SystemParams,
    codeword_for_message,
    demodulate,
    generate_codebook,
    generate_pilots,
    mmse_estimate,
    modulate,
    pilot_collisions,
    read_frame_dump,
    simulate_slots,
    write_frame_dump,
)


def test_system_params_ebn0():
    p = SystemParams(K_a=4, q=32, n=10, M=8, P=2.0, B=40)
    assert p.ebn0 == pytest.approx(10 * 2.0 / 40)
    assert p.ebn0_db == pytest.approx(10 * math.log10(0.5))


def test_system_params_validation():
    with pytest.raises(ValueError):
        SystemParams(K_a=0, q=32, n=10, M=8, P=1.0, B=40)
    with pytest.raises(ValueError):
        SystemParams(K_a=4, q=32, n=10, M=8, P=0.0, B=40)


@given(
    q=st.integers(2, 64),
    data=st.data(),
)
@settings(max_examples=50, deadline=None)
def test_modulate_demodulate_round_trip(q, data):
    n = data.draw(st.integers(1, 12))
    cw = np.array(data.draw(st.lists(st.integers(0, q - 1), min_size=n, max_size=n)))
    sig = modulate(cw, q)
    assert sig.shape == (n * q,)
    assert sig.sum() == n  # exactly one pulse per slot
    np.testing.assert_array_equal(demodulate(sig, q), cw)


def test_modulate_range_check():
    with pytest.raises(ValueError):
        modulate(np.array([0, 5]), 4)


def test_generate_codebook_shape_and_determinism():
    cb = generate_codebook(B=6, n=9, q=16, seed=3)
    assert cb.symbols.shape == (64, 9)
    assert cb.n_messages == 64 and cb.n == 9
    cb2 = generate_codebook(B=6, n=9, q=16, seed=3)
    np.testing.assert_array_equal(cb.symbols, cb2.symbols)
    with pytest.raises(ValueError):
        generate_codebook(B=13, n=4, q=8)


def test_codeword_for_message_lazy_determinism():
    a = codeword_for_message(123456789, n=20, q=64, seed=7)
    b = codeword_for_message(123456789, n=20, q=64, seed=7)
    c = codeword_for_message(123456790, n=20, q=64, seed=7)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.min() >= 0 and a.max() < 64


def test_simulate_slots_noiseless_exact():
    params = SystemParams(K_a=3, q=8, n=5, M=4, P=2.0, B=10)
    rng = np.random.default_rng(0)
    cw = rng.integers(0, 8, size=(3, 5))
    slots = simulate_slots(params, cw, seed=1, noiseless=True)
    # Y must equal sqrt(P) H X exactly
    for i in range(5):
        expect = math.sqrt(2.0) * slots.H @ slots.X[i]
        np.testing.assert_allclose(slots.Y[i], expect, atol=1e-14)
    # X one-hot rows matching the codewords
    assert slots.X.sum() == 3 * 5
    for i in range(5):
        np.testing.assert_array_equal(slots.X[i].argmax(axis=1), cw[:, i])


def test_simulate_slots_noise_statistics():
    params = SystemParams(K_a=2, q=16, n=50, M=8, P=1.0, B=10)
    cw = np.zeros((2, 50), dtype=int)
    slots = simulate_slots(params, cw, seed=2)
    z = slots.Z.ravel()
    assert np.abs(z.mean()) < 0.01
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, rel=0.03)


def test_simulate_slots_shape_mismatch():
    params = SystemParams(K_a=3, q=8, n=5, M=4, P=2.0, B=10)
    with pytest.raises(ValueError):
        simulate_slots(params, np.zeros((2, 5), dtype=int))


def test_pilots_constant_modulus():
    pool = generate_pilots(pool_size=32, n_p=7, seed=0)
    assert pool.shape == (32, 7)
    np.testing.assert_allclose(np.abs(pool), 1.0, atol=1e-12)
    np.testing.assert_allclose((np.abs(pool) ** 2).sum(axis=1), 7.0, atol=1e-9)


def test_pilot_collisions_mask():
    mask = pilot_collisions(np.array([3, 1, 3, 2, 1, 5]))
    np.testing.assert_array_equal(mask, [True, True, True, False, True, False])


def test_mmse_estimate_closed_form_variances():
    """Orthogonal pilots: estimate var P*n_p/(P*n_p+1), error var 1/(P*n_p+1)."""
    rng = np.random.default_rng(4)
    M, n_p, P, trials = 4, 8, 1.5, 4000
    pilots = np.exp(2j * math.pi * np.outer(np.arange(1), np.arange(n_p)) / n_p)
    pilots = np.exp(2j * math.pi * rng.uniform(size=(1, n_p)))  # single user
    est_energy = err_energy = 0.0
    for _ in range(trials):
        h = (rng.standard_normal((M, 1)) + 1j * rng.standard_normal((M, 1))) / math.sqrt(2)
        Z = (rng.standard_normal((M, n_p)) + 1j * rng.standard_normal((M, n_p))) / math.sqrt(2)
        V = math.sqrt(P) * h @ pilots + Z
        est = mmse_estimate(V, pilots, P)
        est_energy += np.mean(np.abs(est.Hhat) ** 2)
        err_energy += np.mean(np.abs(est.Hhat - h) ** 2)
        assert est.err_var[0] == pytest.approx(1.0 / (P * n_p + 1), rel=1e-9)
    est_energy /= trials
    err_energy /= trials
    assert est_energy == pytest.approx(P * n_p / (P * n_p + 1), rel=0.05)
    assert err_energy == pytest.approx(1.0 / (P * n_p + 1), rel=0.05)


def test_mmse_estimate_orthogonality_principle():
    """E[(h - hhat) hhat^*] = 0 for the linear MMSE estimator."""
    rng = np.random.default_rng(9)
    M, n_p, P, trials = 1, 4, 2.0, 20000
    pilots = np.exp(2j * math.pi * rng.uniform(size=(1, n_p)))
    acc = 0.0
    for _ in range(trials):
        h = (rng.standard_normal((M, 1)) + 1j * rng.standard_normal((M, 1))) / math.sqrt(2)
        Z = (rng.standard_normal((M, n_p)) + 1j * rng.standard_normal((M, n_p))) / math.sqrt(2)
        V = math.sqrt(P) * h @ pilots + Z
        est = mmse_estimate(V, pilots, P)
        acc += ((h - est.Hhat) * est.Hhat.conj()).item()
    assert abs(acc / trials) < 0.02


def test_mmse_estimate_collided_pilots_shrink():
    """Two users on the same pilot: estimator sees the sum, larger error var."""
    rng = np.random.default_rng(11)
    n_p, P = 6, 1.0
    phi = np.exp(2j * math.pi * rng.uniform(size=n_p))
    pilots = np.vstack([phi, phi])  # duplicate rows = collision
    V = rng.standard_normal((3, n_p)) + 0j
    est = mmse_estimate(V, pilots, P)
    # symmetric users get identical estimates and error variances
    np.testing.assert_allclose(est.Hhat[:, 0], est.Hhat[:, 1], atol=1e-12)
    solo = mmse_estimate(V, phi[None, :], P)
    assert est.err_var[0] > solo.err_var[0]


def test_frame_dump_round_trip(tmp_path):
    params = SystemParams(K_a=2, q=8, n=4, M=3, P=1.0, B=6)
    cw = np.random.default_rng(0).integers(0, 8, size=(2, 4))
    slots = simulate_slots(params, cw, seed=5)
    path = tmp_path / "frame.bin"
    write_frame_dump(path, slots)
    back = read_frame_dump(path)
    assert back.shape == (4, 3, 8)
    np.testing.assert_allclose(back, slots.Y.astype(np.complex64), atol=0)
    # header sanity
    raw = path.read_bytes()
    assert raw[:4] == b"COMA"
    assert len(raw) == 16 + 4 * 3 * 8 * 8


def test_frame_dump_rejects_bad_magic(tmp_path):
    path = tmp_path / "bogus.bin"
    path.write_bytes(b"XXXX" + b"\x00" * 12)
    with pytest.raises(ValueError):
        read_frame_dump(path)
