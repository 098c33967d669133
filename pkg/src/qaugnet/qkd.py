"""Classical simulation of BB84 key establishment, key pools and one-time pad.

The channel is noiseless; the only source of errors is an optional
intercept-resend eavesdropper.  A tenth of the sifted bits (rounded up) is
revealed to estimate the QBER and the session aborts above 11%.  No error
correction or privacy amplification is done: the remaining sifted bits are
the key.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import AbortedSession, InputError, KeyExhausted

SACRIFICE_FRACTION = Fraction(1, 10)
SIFT_EFFICIENCY = Fraction(1, 2)
QBER_ABORT_THRESHOLD = 0.11


class EveModel(str, enum.Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept_resend"


@dataclass(frozen=True)
class Bb84Session:
    n_raw: int
    alice_bits: np.ndarray
    alice_bases: np.ndarray
    bob_bases: np.ndarray
    bob_results: np.ndarray
    matched: np.ndarray        # raw indices where bases agree
    sacrificed_idx: np.ndarray  # subset of ``matched`` revealed for QBER
    kept_idx: np.ndarray       # ``matched`` minus ``sacrificed_idx``
    qber_estimate: float
    aborted: bool

    @property
    def sacrificed(self) -> int:
        return len(self.sacrificed_idx)

    @property
    def sifted_key(self) -> np.ndarray:
        return self.alice_bits[self.kept_idx]

    @property
    def bob_key(self) -> np.ndarray:
        return self.bob_results[self.kept_idx]


def _sacrifice_count(n_sifted: int) -> int:
    # ceil(f * n) in exact arithmetic; at least one bit whenever any exist
    return -(-n_sifted * SACRIFICE_FRACTION.numerator // SACRIFICE_FRACTION.denominator)


def run_bb84(n_qubits: int, eve: EveModel = EveModel.NONE, seed: Optional[int] = None,
             *, matched_bases: bool = False) -> Bb84Session:
    """Simulate one BB84 round of ``n_qubits`` prepared qubits.

    ``matched_bases`` forces Bob to pick Alice's bases (test hook).
    """
    if n_qubits < 0:
        raise InputError("n_qubits must be non-negative")
    eve = EveModel(eve)
    rng = np.random.default_rng(seed)
    alice_bits = rng.integers(0, 2, n_qubits, dtype=np.uint8)
    alice_bases = rng.integers(0, 2, n_qubits, dtype=np.uint8)

    bits_in_flight, bases_in_flight = alice_bits, alice_bases
    if eve is EveModel.INTERCEPT_RESEND:
        eve_bases = rng.integers(0, 2, n_qubits, dtype=np.uint8)
        guesses = rng.integers(0, 2, n_qubits, dtype=np.uint8)
        bits_in_flight = np.where(eve_bases == alice_bases, alice_bits, guesses)
        bases_in_flight = eve_bases

    bob_bases = alice_bases.copy() if matched_bases else rng.integers(0, 2, n_qubits, dtype=np.uint8)
    coin = rng.integers(0, 2, n_qubits, dtype=np.uint8)
    bob_results = np.where(bob_bases == bases_in_flight, bits_in_flight, coin).astype(np.uint8)

    matched = np.flatnonzero(alice_bases == bob_bases)
    k = _sacrifice_count(len(matched))
    sacrificed = np.sort(rng.choice(matched, size=k, replace=False)) if k else matched[:0]
    kept = np.setdiff1d(matched, sacrificed, assume_unique=True)
    errors = int(np.count_nonzero(alice_bits[sacrificed] != bob_results[sacrificed]))
    qber = errors / k if k else 0.0
    return Bb84Session(n_qubits, alice_bits, alice_bases, bob_bases, bob_results,
                       matched, sacrificed, kept, qber, qber > QBER_ABORT_THRESHOLD)


def sifted_fraction(session: Bb84Session) -> float:
    if session.n_raw <= 0:
        raise InputError("sifted fraction is undefined for an empty session")
    return len(session.matched) / session.n_raw


def session_log_csv(session: Bb84Session) -> str:
    kept = np.zeros(session.n_raw, dtype=bool)
    kept[session.kept_idx] = True
    sacrificed = np.zeros(session.n_raw, dtype=bool)
    sacrificed[session.sacrificed_idx] = True
    names = "RD"  # rectilinear, diagonal
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "alice_basis", "bob_basis", "kept", "sacrificed"])
    for i in range(session.n_raw):
        writer.writerow([i, names[session.alice_bases[i]], names[session.bob_bases[i]],
                         int(kept[i]), int(sacrificed[i])])
    return buf.getvalue()


def qubit_cost(payload_bytes: int) -> int:
    """Raw qubits needed to distil ``8 * payload_bytes`` key bits:
    ceil(8L / ((1 - f) * 0.5)) with the sacrifice fraction f = 0.1."""
    if payload_bytes < 0:
        raise InputError("payload size must be non-negative")
    yield_per_qubit = (1 - SACRIFICE_FRACTION) * SIFT_EFFICIENCY  # 9/20
    n = 8 * payload_bytes * yield_per_qubit.denominator
    return -(-n // yield_per_qubit.numerator)


# -- key pools -----------------------------------------------------------------

@dataclass
class KeyPool:
    """Append-only bit store consumed strictly front to back.

    Each consumption is recorded as a half-open ``(start, stop)`` range of
    absolute bit indices so reuse is auditable.
    """

    channel_id: int
    _bits: bytearray = field(default_factory=bytearray, repr=False)
    total_consumed: int = 0
    consumed_ranges: list = field(default_factory=list, repr=False)

    @property
    def total_generated(self) -> int:
        return len(self._bits)

    @property
    def available(self) -> int:
        return self.total_generated - self.total_consumed

    @property
    def next_index(self) -> int:
        return self.total_consumed

    def refill_bits(self, bits) -> "KeyPool":
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.size and arr.max() > 1:
            raise InputError("key bits must be 0 or 1")
        self._bits.extend(arr.tobytes())
        return self

    def take(self, n_bits: int) -> tuple[int, np.ndarray]:
        if n_bits > self.available:
            raise KeyExhausted(
                f"channel {self.channel_id}: need {n_bits} bits, {self.available} available")
        start = self.total_consumed
        bits = np.frombuffer(bytes(self._bits[start:start + n_bits]), dtype=np.uint8)
        self.total_consumed += n_bits
        self.consumed_ranges.append((start, start + n_bits))
        return start, bits


def refill_pool(pool: KeyPool, session: Bb84Session, side: str = "alice") -> KeyPool:
    """Append a session's sifted key; ``side='bob'`` appends Bob's copy."""
    if session.aborted:
        raise AbortedSession(f"QBER {session.qber_estimate:.3f} above {QBER_ABORT_THRESHOLD}")
    if side not in ("alice", "bob"):
        raise InputError("side must be 'alice' or 'bob'")
    return pool.refill_bits(session.sifted_key if side == "alice" else session.bob_key)


def _xor_with_pool(data: bytes, pool: KeyPool) -> tuple[bytes, int, int]:
    n_bits = 8 * len(data)
    start, bits = pool.take(n_bits)
    key = np.packbits(bits)
    out = np.bitwise_xor(np.frombuffer(data, dtype=np.uint8), key)
    return out.tobytes(), n_bits, start


def otp_encrypt(plaintext: bytes, pool: KeyPool) -> tuple[bytes, int]:
    ciphertext, n_bits, _ = _xor_with_pool(bytes(plaintext), pool)
    return ciphertext, n_bits


def otp_decrypt(ciphertext: bytes, pool: KeyPool) -> tuple[bytes, int]:
    plaintext, n_bits, _ = _xor_with_pool(bytes(ciphertext), pool)
    return plaintext, n_bits


@dataclass
class Provisioning:
    sender: KeyPool
    receiver: KeyPool
    raw_qubits: int = 0
    rounds: int = 0
    aborted_rounds: int = 0


def provision_pools(channel_id: int, bits_needed: int, seed: int,
                    eve: EveModel = EveModel.NONE, max_round: int = 1_000_000) -> Provisioning:
    """Run BB84 rounds until both ends hold ``bits_needed`` key bits.

    Provisioning stops at the first aborted round: a channel under attack is
    left short of key so the shortage shows up downstream.
    """
    prov = Provisioning(KeyPool(channel_id), KeyPool(channel_id))
    while prov.sender.available < bits_needed:
        missing = bits_needed - prov.sender.available
        n = min(max_round, qubit_cost(math.ceil(missing / 8)) + 64)
        session = run_bb84(n, eve, seed=(seed, channel_id, prov.rounds))
        prov.rounds += 1
        prov.raw_qubits += n
        if session.aborted:
            prov.aborted_rounds += 1
            break
        refill_pool(prov.sender, session, "alice")
        refill_pool(prov.receiver, session, "bob")
    return prov
