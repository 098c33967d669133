"""Discrete-event model of the privacy-aware augmented network.

Stage I (sender) classifies each email and builds a Q-SEND frame: private
mail is one-time-pad encrypted with QKD key material and carries a quantum
section, everything else is masked with a static classical key.  Stage II
routes on the header blocks only and the gateway decrypts.  Stage III
re-classifies the delivered text and counts label disagreements.

Frames cross a single fiber with two lanes: header and classical payload
bytes are counted on the classical wavelength, qubit symbols on the quantum
wavelength.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import heapq
import io
import itertools
import random
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import frame as fr
from .classifier import LogisticModel, predict
from .corpus import Corpus, EmailRecord
from .errors import InputError, IntegrityError, MalformedFrame, QAugError, UnknownChannel
from .features import Vocabulary, transform
from .qkd import EveModel, KeyPool, otp_decrypt, otp_encrypt, provision_pools, qubit_cost

LABEL_HEADER = "X-Privacy-Label"
KEY_INDEX_HEADER = "X-Key-Index"
KEY_CHECK_HEADER = "X-Key-Check"


class Route(str, enum.Enum):
    QUANTUM_GATEWAY = "quantum_gateway"
    CLASSICAL_GATEWAY = "classical_gateway"


class EventKind(str, enum.Enum):
    SUBMIT = "submit"
    ROUTE = "route"
    GATEWAY = "gateway"
    DELIVER = "deliver"
    REASSESS = "reassess"


@dataclass(order=True, frozen=True)
class SimEvent:
    tick: int
    seq: int
    kind: EventKind = field(compare=False)
    frame_id: int = field(compare=False)


@dataclass
class Link:
    latency_ticks: int = 1
    lambda_c_bytes: int = 0
    lambda_q_qubits: int = 0

    def carry(self, classical_bytes: int, qubits: int) -> None:
        if classical_bytes < 0 or qubits < 0:
            raise InputError("lane counters only grow")
        self.lambda_c_bytes += classical_bytes
        self.lambda_q_qubits += qubits


@dataclass
class SimStats:
    frames_total: int = 0
    frames_quantum: int = 0
    frames_classical: int = 0
    qubits_used: int = 0
    classical_bytes: int = 0
    mismatches: int = 0
    delivered: int = 0
    errors: int = 0
    provisioned_qubits: int = 0
    aborted_sessions: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FrameLogEntry:
    frame_id: int
    email_id: int
    label_sender: Optional[int] = None
    path: str = "dropped"
    qubits: int = 0
    bytes: int = 0
    label_receiver: Optional[int] = None
    mismatch: Optional[bool] = None
    has_quantum_section: Optional[bool] = None
    error: Optional[str] = None


LOG_COLUMNS = ("frame_id", "label_sender", "path", "qubits", "bytes", "label_receiver", "mismatch")


def frame_log_csv(log: list[FrameLogEntry]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LOG_COLUMNS)
    for e in log:
        row = []
        for col in LOG_COLUMNS:
            v = getattr(e, col)
            row.append("" if v is None else int(v) if isinstance(v, bool) else v)
        writer.writerow(row)
    return buf.getvalue()


@dataclass
class SimConfig:
    model: LogisticModel
    vocab: Vocabulary
    seed: int = 0
    sample_min: Optional[int] = None  # None: whole corpus
    sample_max: Optional[int] = None
    latency_ticks: int = 1
    eve: EveModel = EveModel.NONE
    channel_id: int = 1
    sender_threshold: Optional[float] = None
    receiver_threshold: Optional[float] = None
    host: str = "bob.example.com"
    path: str = "/secure-email"


def classical_session_key(seed: int) -> bytes:
    return hashlib.sha256(f"classical-session-{seed}".encode()).digest()


def xor_mask(data: bytes, key: bytes) -> bytes:
    """Repeating-key XOR; a placeholder for the classical cipher."""
    if not key:
        raise InputError("empty mask key")
    reps = -(-len(data) // len(key))
    stream = np.frombuffer((key * reps)[:len(data)], dtype=np.uint8)
    return np.bitwise_xor(np.frombuffer(data, dtype=np.uint8), stream).tobytes()


def _key_check(ciphertext: bytes, plaintext: bytes) -> str:
    # digest of the key stream (= ciphertext XOR plaintext), never the text
    return hashlib.sha256(xor_mask(ciphertext, plaintext) if plaintext else b"").hexdigest()[:16]


def _simulated_qubits(n: int, rng: np.random.Generator) -> tuple[fr.QubitSymbol, ...]:
    return fr.symbols_from_values(rng.integers(0, 4, size=n).tolist())


def classify(text: str, model: LogisticModel, vocab: Vocabulary,
             threshold: Optional[float] = None) -> int:
    return predict(model, transform(text, vocab), threshold)


def sender_pipeline(email: EmailRecord, model: LogisticModel, vocab: Vocabulary,
                    pools: dict[int, KeyPool], *, channel_id: int = 1,
                    classical_key: bytes = classical_session_key(0),
                    rng: Optional[np.random.Generator] = None,
                    threshold: Optional[float] = None,
                    host: str = "bob.example.com", path: str = "/secure-email") -> fr.HybridFrame:
    """Classify ``email`` and wrap it in a Q-SEND frame (Stage I)."""
    rng = rng if rng is not None else np.random.default_rng(email.id)
    message = email.text.encode("utf-8")
    label = classify(email.text, model, vocab, threshold)
    if label == 0:
        return fr.build_qsend_request(host, path, fr.EncryptionMode.CLASSICAL, channel_id,
                                      xor_mask(message, classical_key),
                                      extra_headers=[(LABEL_HEADER, "0")])
    if channel_id not in pools:
        raise UnknownChannel(f"no key pool for channel {channel_id}")
    pool = pools[channel_id]
    start = pool.next_index
    ciphertext, _ = otp_encrypt(message, pool)
    n = qubit_cost(len(message))
    section = (fr.QuantumHeader("BB84", n, channel_id), _simulated_qubits(n, rng))
    return fr.build_qsend_request(
        host, path, fr.EncryptionMode.QUANTUM, channel_id, ciphertext, section,
        extra_headers=[(LABEL_HEADER, "1"), (KEY_INDEX_HEADER, str(start)),
                       (KEY_CHECK_HEADER, _key_check(ciphertext, message))],
    )


def switch_route(data) -> Route:
    """Stage II switch: decide the gateway from the header blocks alone."""
    if isinstance(data, fr.HybridFrame):
        data = fr.encode_frame(data)
    return Route.QUANTUM_GATEWAY if fr.peek_quantum_header(bytes(data)) else Route.CLASSICAL_GATEWAY


def gateway_process(frame: fr.HybridFrame, pools: dict[int, KeyPool],
                    classical_key: bytes = classical_session_key(0)) -> bytes:
    """Recover the plaintext at the receiving gateway."""
    if not fr.has_quantum_payload(frame):
        return xor_mask(frame.classical_payload, classical_key)
    channel = frame.quantum_header.channel_id
    if channel not in pools:
        raise UnknownChannel(f"frame names channel {channel}, configured: {sorted(pools)}")
    pool = pools[channel]
    declared = frame.http_headers.get(KEY_INDEX_HEADER)
    if declared is not None and declared != str(pool.next_index):
        raise IntegrityError(f"key index {declared} but receiver is at {pool.next_index}")
    plaintext, _ = otp_decrypt(frame.classical_payload, pool)
    check = frame.http_headers.get(KEY_CHECK_HEADER)
    if check is not None and check != _key_check(frame.classical_payload, plaintext):
        raise IntegrityError("key check mismatch between sender and receiver pools")
    return plaintext


def receiver_process(message: str, model: LogisticModel, vocab: Vocabulary,
                     threshold: Optional[float] = None) -> int:
    """Stage III: re-run the privacy classifier on the delivered text."""
    return classify(message, model, vocab, threshold)


def _quantum_section_size(frame: fr.HybridFrame) -> int:
    if frame.quantum_header is None:
        return 0
    return len(fr.encode_quantum_section(frame.quantum_header, frame.quantum_payload))


def run_simulation(corpus: Corpus, config: SimConfig) -> tuple[SimStats, list[FrameLogEntry]]:
    records = list(corpus.records)
    lo = len(records) if config.sample_min is None else config.sample_min
    hi = lo if config.sample_max is None else config.sample_max
    if not 0 <= lo <= hi <= len(records):
        raise InputError(f"sample range [{lo}, {hi}] does not fit a corpus of {len(records)}")
    rng = random.Random(config.seed)
    sample = rng.sample(records, rng.randint(lo, hi))

    stats = SimStats()
    log = [FrameLogEntry(i, email.id) for i, email in enumerate(sample)]
    if not sample:
        return stats, log

    # worst case: every sampled email is private
    demand = sum(8 * len(e.text.encode("utf-8")) for e in sample)
    prov = provision_pools(config.channel_id, demand, config.seed, config.eve)
    stats.provisioned_qubits = prov.raw_qubits
    stats.aborted_sessions = prov.aborted_rounds
    sender_pools = {config.channel_id: prov.sender}
    receiver_pools = {config.channel_id: prov.receiver}
    ckey = classical_session_key(config.seed)
    qrng = np.random.default_rng(config.seed)
    link = Link(config.latency_ticks)

    wire: dict[int, bytes] = {}
    frames: dict[int, fr.HybridFrame] = {}
    routes: dict[int, Route] = {}
    delivered: dict[int, bytes] = {}
    seq = itertools.count()
    queue: list[SimEvent] = []

    def schedule(tick: int, kind: EventKind, fid: int) -> None:
        heapq.heappush(queue, SimEvent(tick, next(seq), kind, fid))

    def fail(fid: int, exc: Exception) -> None:
        log[fid].error = f"{type(exc).__name__}: {exc}"
        stats.errors += 1

    for fid in range(len(sample)):
        schedule(fid, EventKind.SUBMIT, fid)

    while queue:
        ev = heapq.heappop(queue)
        fid, entry = ev.frame_id, log[ev.frame_id]
        try:
            if ev.kind is EventKind.SUBMIT:
                f = sender_pipeline(sample[fid], config.model, config.vocab, sender_pools,
                                    channel_id=config.channel_id, classical_key=ckey, rng=qrng,
                                    threshold=config.sender_threshold,
                                    host=config.host, path=config.path)
                frames[fid] = f
                wire[fid] = fr.encode_frame(f)
                entry.label_sender = int(f.http_headers[LABEL_HEADER])
                entry.has_quantum_section = f.quantum_header is not None
                stats.frames_total += 1
                schedule(ev.tick + config.latency_ticks, EventKind.ROUTE, fid)
            elif ev.kind is EventKind.ROUTE:
                route = switch_route(wire[fid])
                routes[fid] = route
                f = frames[fid]
                qubits = f.quantum_header.num_qubits if f.quantum_header else 0
                entry.bytes = len(wire[fid]) - _quantum_section_size(f)
                entry.qubits = qubits
                link.carry(entry.bytes, qubits)
                stats.classical_bytes += entry.bytes
                if route is Route.QUANTUM_GATEWAY:
                    entry.path = "quantum"
                    stats.frames_quantum += 1
                    stats.qubits_used += qubits
                else:
                    entry.path = "classical"
                    stats.frames_classical += 1
                schedule(ev.tick + 1, EventKind.GATEWAY, fid)
            elif ev.kind is EventKind.GATEWAY:
                received = fr.decode_frame(wire[fid])
                if fr.has_quantum_payload(received) != (routes[fid] is Route.QUANTUM_GATEWAY):
                    raise MalformedFrame("frame reached the wrong gateway")
                delivered[fid] = gateway_process(received, receiver_pools, ckey)
                schedule(ev.tick + config.latency_ticks, EventKind.DELIVER, fid)
            elif ev.kind is EventKind.DELIVER:
                stats.delivered += 1
                schedule(ev.tick, EventKind.REASSESS, fid)
            else:
                label = receiver_process(delivered[fid].decode("utf-8"), config.model,
                                         config.vocab, config.receiver_threshold)
                entry.label_receiver = label
                entry.mismatch = label != entry.label_sender
                stats.mismatches += int(entry.mismatch)
        except QAugError as exc:
            fail(fid, exc)
    return stats, log
