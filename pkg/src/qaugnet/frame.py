"""Hybrid Q-HTTP frame: data types and a byte-exact codec.

Wire layout of a frame::

    <request line>\\r\\n
    <Name>: <value>\\r\\n          (HTTP headers, insertion order, Content-Length required)
    \\r\\n
    <classical payload, exactly Content-Length bytes>
    Q-Encoding-Scheme: BB84\\r\\n   (quantum section, only when present)
    Q-Num-Qubits: <n>\\r\\n
    X-Quantum-Channel-ID: <id>\\r\\n
    \\r\\n
    <ceil(n / 4) packed bytes>

Each simulated qubit is a (basis, bit) pair packed into two bits, basis in the
high bit, four symbols per byte starting from the most significant end, and
the final byte zero padded.  The codec only accepts the canonical form, so
``encode_frame(decode_frame(b)) == b`` for every accepted ``b``.
"""

from __future__ import annotations

import enum
import http
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import (
    InconsistentMode,
    InputError,
    MalformedFrame,
    MalformedHeader,
    Truncated,
    UnsupportedScheme,
)

REQUEST_LINE = ":request-line"
CRLF = b"\r\n"
SUPPORTED_SCHEMES = frozenset({"BB84"})

_TOKEN_RE = re.compile(r"^[!#$%&'*+\-.^_`|~0-9A-Za-z]+$")
_VALUE_RE = re.compile(r"^[\t\x20-\x7e]*$")
_UINT_RE = re.compile(r"^(0|[1-9][0-9]*)$")


class Basis(enum.IntEnum):
    RECTILINEAR = 0
    DIAGONAL = 1


class QubitSymbol(NamedTuple):
    basis: Basis
    bit: int


# Symbols are interned so large payloads can be handled by identity.
_SYMBOLS = tuple(QubitSymbol(Basis(v >> 1), v & 1) for v in range(4))
_CANONICAL = {(b, v): sym for sym in _SYMBOLS for b, v in [tuple(sym)]}
_VALUE_BY_ID = {id(sym): v for v, sym in enumerate(_SYMBOLS)}


def symbols_from_values(values: Iterable[int]) -> tuple[QubitSymbol, ...]:
    """Map 2-bit values (basis << 1 | bit) to qubit symbols."""
    return tuple(_SYMBOLS[v] for v in values)


def _canonical_symbols(symbols: Sequence) -> tuple[QubitSymbol, ...]:
    if all(map(_VALUE_BY_ID.__contains__, map(id, symbols))):
        return tuple(symbols)
    try:
        return tuple(_CANONICAL[tuple(s)] for s in symbols)
    except (KeyError, TypeError) as exc:
        raise MalformedFrame("qubit symbols must be (basis, bit) pairs of 0/1") from exc


class EncryptionMode(str, enum.Enum):
    QUANTUM = "quantum"
    CLASSICAL = "classical"


class QuantumStatus(str, enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    NONE = "none"


def _check_header(name: str, value: str) -> None:
    for part in (name, value):
        if not isinstance(part, str):
            raise MalformedHeader(f"header parts must be str, got {type(part).__name__}")
        if "\r" in part or "\n" in part:
            raise MalformedHeader(f"CR/LF in header {name!r}")
    bare = name[1:] if name.startswith(":") else name
    if not _TOKEN_RE.match(bare):
        raise MalformedHeader(f"header name {name!r} is not an HTTP token")
    if not _VALUE_RE.match(value):
        raise MalformedHeader(f"header {name!r} has a non-ASCII or control character value")


class HeaderMap:
    """Ordered, immutable header container with case-insensitive lookup."""

    __slots__ = ("_pairs", "_index")

    def __init__(self, pairs: Iterable[tuple[str, str]] = ()):
        items = tuple((n, v) for n, v in pairs)
        index: dict[str, int] = {}
        for i, (name, value) in enumerate(items):
            _check_header(name, value)
            key = name.lower()
            if key in index:
                raise MalformedHeader(f"duplicate header {name!r}")
            index[key] = i
        self._pairs = items
        self._index = index

    def get(self, name: str, default: Optional[str] = None) -> Optional[str]:
        i = self._index.get(name.lower())
        return default if i is None else self._pairs[i][1]

    def __getitem__(self, name: str) -> str:
        i = self._index.get(name.lower())
        if i is None:
            raise KeyError(name)
        return self._pairs[i][1]

    def __contains__(self, name: object) -> bool:
        return isinstance(name, str) and name.lower() in self._index

    def __iter__(self) -> Iterator[tuple[str, str]]:
        return iter(self._pairs)

    def __len__(self) -> int:
        return len(self._pairs)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, HeaderMap) and self._pairs == other._pairs

    def __hash__(self) -> int:
        return hash(self._pairs)

    def __repr__(self) -> str:
        return f"HeaderMap({list(self._pairs)!r})"

    def items(self) -> tuple[tuple[str, str], ...]:
        return self._pairs

    def with_header(self, name: str, value: str) -> "HeaderMap":
        """Return a copy with ``name`` replaced in place, or appended if new."""
        key = name.lower()
        if key in self._index:
            pairs = [(n, value) if n.lower() == key else (n, v) for n, v in self._pairs]
        else:
            pairs = [*self._pairs, (name, value)]
        return HeaderMap(pairs)


@dataclass(frozen=True)
class QuantumHeader:
    encoding_scheme: str
    num_qubits: int
    channel_id: int

    def __post_init__(self) -> None:
        if self.encoding_scheme not in SUPPORTED_SCHEMES:
            raise UnsupportedScheme(self.encoding_scheme)
        if self.num_qubits < 0 or self.channel_id < 0:
            raise InputError("num_qubits and channel_id must be non-negative")


@dataclass(frozen=True)
class HybridFrame:
    http_headers: HeaderMap
    classical_payload: bytes = b""
    quantum_header: Optional[QuantumHeader] = None
    quantum_payload: Optional[tuple[QubitSymbol, ...]] = None

    def __post_init__(self) -> None:
        pairs = self.http_headers.items()
        if not pairs or pairs[0][0] != REQUEST_LINE or not pairs[0][1]:
            raise MalformedFrame("first header must be a non-empty :request-line")
        if any(n.startswith(":") for n, _ in pairs[1:]):
            raise MalformedFrame("only one pseudo-header is allowed")
        if self.http_headers.get("Content-Length") != str(len(self.classical_payload)):
            raise MalformedFrame("Content-Length does not match the classical payload")
        if (self.quantum_header is None) != (self.quantum_payload is None):
            raise MalformedFrame("quantum header and quantum payload must come together")
        if self.quantum_payload is not None:
            object.__setattr__(self, "quantum_payload", _canonical_symbols(self.quantum_payload))
            if self.quantum_header.num_qubits != len(self.quantum_payload):
                raise MalformedFrame("Q-Num-Qubits does not match the qubit sequence length")

    @property
    def request_line(self) -> str:
        return self.http_headers[REQUEST_LINE]


def make_frame(
    request_line: str,
    headers: Iterable[tuple[str, str]] = (),
    body: bytes = b"",
    quantum_header: Optional[QuantumHeader] = None,
    qubits: Optional[Sequence[QubitSymbol]] = None,
) -> HybridFrame:
    """Build a frame, filling in the pseudo-header and Content-Length."""
    pairs = [(REQUEST_LINE, request_line), *headers]
    hm = HeaderMap(pairs).with_header("Content-Length", str(len(body)))
    return HybridFrame(hm, bytes(body), quantum_header,
                       None if qubits is None else tuple(qubits))


# -- qubit packing -----------------------------------------------------------

def pack_qubits(symbols: Sequence[QubitSymbol]) -> bytes:
    n = len(symbols)
    vals = np.zeros(4 * ((n + 3) // 4), dtype=np.uint8)
    if n:
        canon = _canonical_symbols(symbols)
        vals[:n] = np.fromiter(map(_VALUE_BY_ID.__getitem__, map(id, canon)), np.uint8, n)
    quads = vals.reshape(-1, 4)
    packed = (quads[:, 0] << 6) | (quads[:, 1] << 4) | (quads[:, 2] << 2) | quads[:, 3]
    return packed.astype(np.uint8).tobytes()


def unpack_qubits(data: bytes, n: int) -> tuple[QubitSymbol, ...]:
    if len(data) != (n + 3) // 4:
        raise MalformedFrame(f"expected {(n + 3) // 4} packed bytes for {n} qubits")
    raw = np.frombuffer(data, dtype=np.uint8)
    vals = np.stack([(raw >> shift) & 0b11 for shift in (6, 4, 2, 0)], axis=1).ravel()
    if vals[n:].any():
        raise MalformedFrame("non-zero padding in the last qubit byte")
    return symbols_from_values(vals[:n].tolist())


# -- encoding ----------------------------------------------------------------

def _header_lines(lines: Iterable[str]) -> bytes:
    return b"".join(line.encode("ascii") + CRLF for line in lines) + CRLF


def encode_quantum_section(header: QuantumHeader, qubits: Sequence[QubitSymbol]) -> bytes:
    block = _header_lines([
        f"Q-Encoding-Scheme: {header.encoding_scheme}",
        f"Q-Num-Qubits: {header.num_qubits}",
        f"X-Quantum-Channel-ID: {header.channel_id}",
    ])
    return block + pack_qubits(qubits)


def encode_frame(frame: HybridFrame) -> bytes:
    for name, value in frame.http_headers:
        _check_header(name, value)
    lines = [frame.request_line]
    lines += [f"{n}: {v}" for n, v in frame.http_headers if n != REQUEST_LINE]
    out = _header_lines(lines) + frame.classical_payload
    if frame.quantum_header is not None:
        out += encode_quantum_section(frame.quantum_header, frame.quantum_payload)
    return out


# -- decoding ----------------------------------------------------------------

def _read_block(data: bytes, start: int) -> tuple[list[str], int]:
    """Split the CRLF-terminated line block at ``start``; return lines and the
    offset just past the blank line."""
    if data.startswith(CRLF, start):
        return [], start + 2
    end = data.find(CRLF + CRLF, start)
    if end < 0:
        raise Truncated("header block not terminated by a blank line")
    raw = data[start:end]
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise MalformedFrame("non-ASCII byte in a header block") from exc
    lines = text.split("\r\n")
    if any("\r" in line or "\n" in line for line in lines):
        raise MalformedFrame("bare CR or LF in a header block")
    return lines, end + 4


def _split_header(line: str) -> tuple[str, str]:
    name, sep, value = line.partition(": ")
    if not sep:
        raise MalformedFrame(f"header line without ': ' separator: {line!r}")
    return name, value


def _parse_uint(text: Optional[str], what: str) -> int:
    if text is None or not _UINT_RE.match(text):
        raise MalformedFrame(f"{what} is missing or not a canonical integer: {text!r}")
    return int(text)


def _parse_http_block(data: bytes) -> tuple[HeaderMap, int, int]:
    lines, offset = _read_block(data, 0)
    if not lines or not lines[0]:
        raise MalformedFrame("missing request line")
    try:
        headers = HeaderMap([(REQUEST_LINE, lines[0]), *map(_split_header, lines[1:])])
    except MalformedHeader as exc:
        raise MalformedFrame(str(exc)) from exc
    if any(n.startswith(":") for n, _ in headers.items()[1:]):
        raise MalformedFrame("pseudo-header on the wire")
    length = _parse_uint(headers.get("Content-Length"), "Content-Length")
    return headers, offset, length


_QHEADER_NAMES = ("Q-Encoding-Scheme", "Q-Num-Qubits", "X-Quantum-Channel-ID")


def _parse_quantum_block(data: bytes, start: int) -> tuple[QuantumHeader, int]:
    lines, offset = _read_block(data, start)
    fields = dict(_split_header(line) for line in lines)
    if len(fields) != len(lines):
        raise MalformedFrame("duplicate line in the quantum header block")
    if "Q-Num-Qubits" not in fields:
        raise MalformedFrame("quantum header without Q-Num-Qubits")
    if tuple(fields) != _QHEADER_NAMES:
        raise MalformedFrame(f"quantum header lines must be exactly {_QHEADER_NAMES}")
    scheme = fields["Q-Encoding-Scheme"]
    if scheme not in SUPPORTED_SCHEMES:
        raise UnsupportedScheme(scheme)
    header = QuantumHeader(
        scheme,
        _parse_uint(fields["Q-Num-Qubits"], "Q-Num-Qubits"),
        _parse_uint(fields["X-Quantum-Channel-ID"], "X-Quantum-Channel-ID"),
    )
    return header, offset


def peek_quantum_header(data: bytes) -> Optional[QuantumHeader]:
    """Read only the header blocks and return the quantum header, if any.

    The classical payload is skipped by offset and the packed qubit bytes are
    never touched.
    """
    _, offset, length = _parse_http_block(data)
    end = offset + length
    if len(data) < end:
        raise Truncated("classical payload shorter than Content-Length")
    if len(data) == end:
        return None
    return _parse_quantum_block(data, end)[0]


def decode_frame(data: bytes) -> HybridFrame:
    headers, offset, length = _parse_http_block(data)
    end = offset + length
    if len(data) < end:
        raise Truncated("classical payload shorter than Content-Length")
    payload = data[offset:end]
    # without this header a hybrid frame cut after its body is indistinguishable
    # from a classical one
    mode = headers.get("Q-Encryption-Mode")
    if len(data) == end:
        if mode == EncryptionMode.QUANTUM.value:
            raise Truncated("quantum mode announced but the quantum section is missing")
        return HybridFrame(headers, payload)
    if mode == EncryptionMode.CLASSICAL.value:
        raise InconsistentMode("classical mode frame carries a quantum section")
    qheader, qoffset = _parse_quantum_block(data, end)
    need = (qheader.num_qubits + 3) // 4
    packed = data[qoffset:]
    if len(packed) < need:
        raise Truncated("quantum payload shorter than Q-Num-Qubits declares")
    if len(packed) > need:
        raise MalformedFrame("trailing bytes after the quantum payload")
    return HybridFrame(headers, payload, qheader, unpack_qubits(packed, qheader.num_qubits))


def has_quantum_payload(frame: Union[HybridFrame, bytes]) -> bool:
    if isinstance(frame, (bytes, bytearray)):
        return peek_quantum_header(bytes(frame)) is not None
    return frame.quantum_header is not None


# -- Q-SEND request / response -------------------------------------------------

def build_qsend_request(
    host: str,
    path: str,
    mode: Union[EncryptionMode, str],
    channel_id: int,
    body: bytes,
    quantum_section: Optional[tuple[QuantumHeader, Sequence[QubitSymbol]]] = None,
    extra_headers: Iterable[tuple[str, str]] = (),
) -> HybridFrame:
    mode = EncryptionMode(mode)
    if mode is EncryptionMode.QUANTUM and quantum_section is None:
        raise InconsistentMode("quantum mode requires a quantum section")
    if mode is EncryptionMode.CLASSICAL and quantum_section is not None:
        raise InconsistentMode("classical mode cannot carry a quantum section")
    headers = [
        ("Host", host),
        ("Q-Encryption-Mode", mode.value),
        ("X-Quantum-Channel-ID", str(channel_id)),
        ("Content-Type", "application/octet-stream"),
        *extra_headers,
    ]
    qheader, qubits = quantum_section if quantum_section else (None, None)
    return make_frame(f"Q-SEND {path} HTTP/1.1", headers, body, qheader, qubits)


@dataclass(frozen=True)
class QResponse:
    status_code: int = 200
    quantum_status: QuantumStatus = QuantumStatus.NONE
    body: bytes = b""

    def __post_init__(self) -> None:
        object.__setattr__(self, "quantum_status", QuantumStatus(self.quantum_status))
        try:
            http.HTTPStatus(self.status_code)
        except ValueError as exc:
            raise InputError(f"unknown HTTP status {self.status_code}") from exc


def build_response(quantum_status: Union[QuantumStatus, str], body: bytes = b"",
                   status_code: int = 200) -> QResponse:
    return QResponse(status_code, QuantumStatus(quantum_status), bytes(body))


def response_for(request: HybridFrame, ok: bool = True, body: bytes = b"") -> QResponse:
    """Answer a request; quantum status is only reported for quantum requests."""
    if not has_quantum_payload(request):
        return build_response(QuantumStatus.NONE, body, 200 if ok else 400)
    status = QuantumStatus.SUCCESS if ok else QuantumStatus.FAILURE
    return build_response(status, body, 200 if ok else 400)


def _status_line(code: int) -> str:
    return f"HTTP/1.1 {code} {http.HTTPStatus(code).phrase}"


def encode_response(resp: QResponse) -> bytes:
    lines = [_status_line(resp.status_code)]
    if resp.quantum_status is not QuantumStatus.NONE:
        lines.append(f"Q-Quantum-Status: {resp.quantum_status.value}")
    lines.append(f"Content-Length: {len(resp.body)}")
    return _header_lines(lines) + resp.body


def decode_response(data: bytes) -> QResponse:
    headers, offset, length = _parse_http_block(data)
    status_line = headers[REQUEST_LINE]
    parts = status_line.split(" ", 2)
    if len(parts) < 2 or parts[0] != "HTTP/1.1" or not _UINT_RE.match(parts[1]):
        raise MalformedFrame(f"bad status line {status_line!r}")
    code = int(parts[1])
    try:
        canonical = _status_line(code)
    except ValueError as exc:
        raise MalformedFrame(f"unknown status code {code}") from exc
    if status_line != canonical:
        raise MalformedFrame(f"non-canonical status line {status_line!r}")
    names = [n for n, _ in headers.items()[1:]]
    if names not in (["Content-Length"], ["Q-Quantum-Status", "Content-Length"]):
        raise MalformedFrame(f"unexpected response headers {names}")
    status = headers.get("Q-Quantum-Status")
    if status is None:
        qstatus = QuantumStatus.NONE
    elif status in (QuantumStatus.SUCCESS.value, QuantumStatus.FAILURE.value):
        qstatus = QuantumStatus(status)
    else:
        raise MalformedFrame(f"bad Q-Quantum-Status {status!r}")
    end = offset + length
    if len(data) < end:
        raise Truncated("response body shorter than Content-Length")
    if len(data) > end:
        raise MalformedFrame("trailing bytes after the response body")
    return QResponse(code, qstatus, data[offset:end])
