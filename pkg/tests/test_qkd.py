from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qaugnet.errors import AbortedSession, InputError, KeyExhausted
from qaugnet.qkd import (EveModel, KeyPool, otp_decrypt, otp_encrypt, provision_pools, qubit_cost,
                         refill_pool, run_bb84, session_log_csv, sifted_fraction)


def reused_bits(pool: KeyPool) -> int:
    """Key bits handed out more than once, recomputed from the audit trail."""
    seen = np.zeros(pool.total_generated, dtype=int)
    for start, stop in pool.consumed_ranges:
        seen[start:stop] += 1
    return int(np.sum(np.maximum(seen - 1, 0)))


def paired_pools(n_bits: int, seed: int = 0) -> tuple[KeyPool, KeyPool]:
    bits = np.random.default_rng(seed).integers(0, 2, n_bits)
    return KeyPool(1).refill_bits(bits), KeyPool(1).refill_bits(bits)


def test_empty_session():
    s = run_bb84(0)
    assert s.qber_estimate == 0 and not s.aborted and len(s.sifted_key) == 0
    with pytest.raises(InputError):
        sifted_fraction(s)
    with pytest.raises(InputError):
        run_bb84(-1)


def test_no_eve_qber_is_zero():
    for seed in range(5):
        s = run_bb84(10_000, EveModel.NONE, seed)
        assert s.qber_estimate == 0.0 and not s.aborted
        assert np.array_equal(s.sifted_key, s.bob_key)


def test_intercept_resend_single_session():
    s = run_bb84(40_000, EveModel.INTERCEPT_RESEND, 1)
    assert abs(s.qber_estimate - 0.25) <= 0.02 and s.aborted


def intercept_resend_mean(sessions=100, n=10_000):
    return float(np.mean([run_bb84(n, "intercept_resend", seed).qber_estimate
                          for seed in range(sessions)]))


def test_intercept_resend_mean():
    assert 0.23 <= intercept_resend_mean() <= 0.27


def test_sifted_fraction():
    assert abs(sifted_fraction(run_bb84(100_000, seed=2)) - 0.5) <= 0.01
    assert sifted_fraction(run_bb84(1000, seed=2, matched_bases=True)) == 1.0


@given(st.integers(0, 3000), st.integers(0, 2**32 - 1), st.sampled_from(list(EveModel)))
def test_session_invariants(n, seed, eve):
    s = run_bb84(n, eve, seed)
    assert len(s.sifted_key) + s.sacrificed <= len(s.matched)
    assert len(s.sifted_key) + s.sacrificed == len(s.matched)
    if len(s.matched):
        assert s.sacrificed == math.ceil(len(s.matched) / 10)
    assert set(s.sacrificed_idx.tolist()) <= set(s.matched.tolist())
    assert not set(s.sacrificed_idx.tolist()) & set(s.kept_idx.tolist())
    errs = np.count_nonzero(s.alice_bits[s.sacrificed_idx] != s.bob_results[s.sacrificed_idx])
    assert s.qber_estimate == (errs / s.sacrificed if s.sacrificed else 0.0)
    assert s.aborted == (s.qber_estimate > 0.11)


def test_session_log_csv():
    s = run_bb84(20, seed=0)
    lines = session_log_csv(s).splitlines()
    assert lines[0] == "index,alice_basis,bob_basis,kept,sacrificed"
    assert len(lines) == 21
    rows = [ln.split(",") for ln in lines[1:]]
    assert sum(int(r[3]) for r in rows) == len(s.sifted_key)
    assert all(r[1] in "RD" and r[2] in "RD" for r in rows)


def test_refill_pool():
    pool = KeyPool(1)
    s = run_bb84(2000, seed=0)
    refill_pool(pool, s)
    assert pool.available == len(s.sifted_key)
    t = run_bb84(1000, seed=1)
    refill_pool(pool, t)
    assert pool.available == len(s.sifted_key) + len(t.sifted_key)
    assert KeyPool(1).refill_bits(np.ones(512)).available == 512
    with pytest.raises(AbortedSession):
        refill_pool(pool, run_bb84(10_000, "intercept_resend", 0))


def test_otp_roundtrip_many_messages():
    rng = random.Random(0)
    msgs = [rng.randbytes(rng.randint(0, 4096)) for _ in range(1000)]
    need = sum(8 * len(m) for m in msgs)
    alice, bob = paired_pools(need, 1)
    for m in msgs:
        c, used = otp_encrypt(m, alice)
        assert used == 8 * len(m)
        assert otp_decrypt(c, bob) == (m, used)
    assert alice.available == 0 and alice.total_consumed == need
    assert reused_bits(alice) == 0 and reused_bits(bob) == 0
    assert alice.total_consumed + alice.available == alice.total_generated


def test_zero_key_is_identity():
    pool = KeyPool(1).refill_bits(np.zeros(80, dtype=np.uint8))
    assert otp_encrypt(b"plaintext!", pool)[0] == b"plaintext!"


def test_key_exhausted_at_boundary():
    pool = KeyPool(1).refill_bits(np.ones(8, dtype=np.uint8))
    with pytest.raises(KeyExhausted):
        otp_encrypt(b"ab", pool)
    assert pool.available == 8
    for length in (1, 5, 64):
        exact, _ = paired_pools(8 * length)
        otp_encrypt(bytes(length), exact)
        assert exact.available == 0
        short, _ = paired_pools(8 * length - 1)
        with pytest.raises(KeyExhausted):
            otp_encrypt(bytes(length), short)


def test_refill_rejects_non_bits():
    with pytest.raises(InputError):
        KeyPool(1).refill_bits([0, 2])


@given(st.lists(st.binary(max_size=64), max_size=20))
def test_pool_accounting(msgs):
    need = sum(8 * len(m) for m in msgs)
    pool, _ = paired_pools(need + 13)
    for m in msgs:
        otp_encrypt(m, pool)
    assert pool.total_consumed + pool.available == pool.total_generated
    assert reused_bits(pool) == 0


def test_qubit_cost():
    assert [qubit_cost(n) for n in (0, 1, 100)] == [0, 18, 1778]
    for n in range(0, 2000, 37):
        assert qubit_cost(n) == math.ceil(8 * n * 20 / 9 - 1e-9)
    with pytest.raises(InputError):
        qubit_cost(-1)


def test_provisioning():
    prov = provision_pools(3, 5000, seed=4)
    assert prov.sender.available >= 5000
    assert prov.sender._bits == prov.receiver._bits
    eve = provision_pools(3, 5000, seed=4, eve="intercept_resend")
    assert eve.aborted_rounds == 1 and eve.sender.available == 0
