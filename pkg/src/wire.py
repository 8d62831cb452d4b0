# src/wire.py
from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import BinaryIO, Optional

from .errors import (
    BadLength,
    BadMagic,
    BadVersion,
    MalformedPayload,
    OutOfRangeElement,
    PayloadTooLarge,
    Truncated,
    UnknownType,
)
from .field_core import PrimeModulus
from .matrix_core import Matrix

# Layout do header: magic(4) | version(1) | msg_type(1) | payload_len(4, LE)
MAGIC = b"ZKP1"
VERSION = 0x01
HEADER = struct.Struct("<4sBBI")
HEADER_LEN = HEADER.size  # 10
MAX_PAYLOAD = 1 << 24
FINGERPRINT_LEN = 8


class MessageType(IntEnum):
    PROVER_HELLO = 0x01
    VERIFIER_HELLO = 0x02
    WITNESS = 0x03
    CHALLENGE = 0x04
    RESPONSE = 0x05
    ROUND_RESULT = 0x06
    SESSION_RESULT = 0x07
    ERROR = 0x7F


class ErrorCode(IntEnum):
    UNKNOWN_PROVER = 0x01
    FINGERPRINT_MISMATCH = 0x02
    MALFORMED = 0x03


# ---------------------------------------------------------------------
# Matrizes
# ---------------------------------------------------------------------
def encode_matrix(m: Matrix) -> bytes:
    """d² elementos row-major, elem_width bytes little-endian cada."""
    w = m.mod.elem_width
    return b"".join(v.to_bytes(w, "little") for v in m.flat())


def decode_matrix(buf: bytes, d: int, mod: PrimeModulus) -> Matrix:
    w = mod.elem_width
    expected = d * d * w
    if len(buf) != expected:
        raise BadLength(f"matriz {d}x{d}: esperados {expected} bytes, recebidos {len(buf)}")
    values = [int.from_bytes(buf[i:i + w], "little") for i in range(0, expected, w)]
    for idx, v in enumerate(values):
        if v >= mod.p:
            raise OutOfRangeElement(f"elemento {idx} = {v} >= p={mod.p}")
    return Matrix.from_flat(mod, d, values)


def matrix_to_hex(m: Matrix) -> str:
    return encode_matrix(m).hex()


def matrix_from_hex(text: str, d: int, mod: PrimeModulus) -> Matrix:
    try:
        raw = bytes.fromhex(text)
    except (TypeError, ValueError) as e:
        raise MalformedPayload(f"hex inválido: {e}")
    return decode_matrix(raw, d, mod)


# ---------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------
def frame_message(t: MessageType, payload: bytes) -> bytes:
    if len(payload) >= MAX_PAYLOAD:
        raise PayloadTooLarge(f"payload de {len(payload)} bytes >= 2^24")
    return HEADER.pack(MAGIC, VERSION, int(t), len(payload)) + payload


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining > 0:
        chunk = stream.read(remaining)
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def parse_frame(stream: BinaryIO) -> tuple[MessageType, bytes]:
    """Lê exatamente um frame do stream; o restante fica intacto."""
    header = _read_exact(stream, HEADER_LEN)
    if len(header) < HEADER_LEN:
        raise Truncated(f"header com {len(header)} de {HEADER_LEN} bytes")
    magic, version, raw_type, length = HEADER.unpack(header)
    if magic != MAGIC:
        raise BadMagic(f"magic inválido: {magic!r}")
    if version != VERSION:
        raise BadVersion(f"versão {version} não suportada")
    try:
        msg_type = MessageType(raw_type)
    except ValueError:
        raise UnknownType(f"tipo de mensagem desconhecido: 0x{raw_type:02x}")
    if length >= MAX_PAYLOAD:
        raise PayloadTooLarge(f"payload_len {length} >= 2^24")
    payload = _read_exact(stream, length)
    if len(payload) < length:
        raise Truncated(f"payload com {len(payload)} de {length} bytes")
    return msg_type, payload


# ---------------------------------------------------------------------
# Payloads
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class Hello:
    owner_id: str
    fingerprint: bytes
    public: Matrix
    rounds: Optional[int] = None  # só no VERIFIER_HELLO


def encode_hello(hello: Hello) -> bytes:
    raw_id = hello.owner_id.encode("utf-8")
    if not 0 < len(raw_id) <= 255:
        raise MalformedPayload(f"id precisa ter 1..255 bytes UTF-8 (tem {len(raw_id)})")
    if len(hello.fingerprint) != FINGERPRINT_LEN:
        raise MalformedPayload("fingerprint precisa ter 8 bytes")
    out = bytes([len(raw_id)]) + raw_id + hello.fingerprint + encode_matrix(hello.public)
    if hello.rounds is not None:
        if not 1 <= hello.rounds <= 0xFFFF:
            raise MalformedPayload(f"rounds fora de [1, 65535]: {hello.rounds}")
        out += hello.rounds.to_bytes(2, "little")
    return out


def peek_hello(payload: bytes) -> tuple[str, bytes]:
    """(id, fingerprint) sem decodificar a matriz; permite responder 0x02 antes de saber o d do peer."""
    if not payload or payload[0] == 0 or len(payload) < 1 + payload[0] + FINGERPRINT_LEN:
        raise MalformedPayload("HELLO curto demais")
    id_len = payload[0]
    try:
        owner_id = payload[1:1 + id_len].decode("utf-8")
    except UnicodeDecodeError as e:
        raise MalformedPayload(f"id não é UTF-8: {e}")
    return owner_id, payload[1 + id_len:1 + id_len + FINGERPRINT_LEN]


def decode_hello(payload: bytes, d: int, mod: PrimeModulus, *, with_rounds: bool) -> Hello:
    if not payload:
        raise MalformedPayload("HELLO vazio")
    id_len = payload[0]
    mat_len = d * d * mod.elem_width
    expected = 1 + id_len + FINGERPRINT_LEN + mat_len + (2 if with_rounds else 0)
    if id_len == 0 or len(payload) != expected:
        raise MalformedPayload(f"HELLO com {len(payload)} bytes, esperados {expected}")
    try:
        owner_id = payload[1:1 + id_len].decode("utf-8")
    except UnicodeDecodeError as e:
        raise MalformedPayload(f"id não é UTF-8: {e}")
    pos = 1 + id_len
    fingerprint = payload[pos:pos + FINGERPRINT_LEN]
    pos += FINGERPRINT_LEN
    public = decode_matrix(payload[pos:pos + mat_len], d, mod)
    pos += mat_len
    rounds = int.from_bytes(payload[pos:pos + 2], "little") if with_rounds else None
    if with_rounds and rounds == 0:
        raise MalformedPayload("rounds = 0")
    return Hello(owner_id, fingerprint, public, rounds)


def encode_challenge(b: int, q: Matrix) -> bytes:
    if b not in (0, 1):
        raise MalformedPayload(f"bit de desafio inválido: {b}")
    return bytes([b]) + encode_matrix(q)


def decode_challenge(payload: bytes, d: int, mod: PrimeModulus) -> tuple[int, Matrix]:
    if not payload:
        raise MalformedPayload("CHALLENGE vazio")
    b = payload[0]
    if b not in (0, 1):
        raise MalformedPayload(f"bit de desafio inválido: {b}")
    if len(payload) != 1 + d * d * mod.elem_width:
        raise MalformedPayload(f"CHALLENGE com {len(payload)} bytes")
    return b, decode_matrix(payload[1:], d, mod)


def encode_round_result(round_index: int, verdict: bool) -> bytes:
    return round_index.to_bytes(2, "little") + bytes([1 if verdict else 0])


def decode_round_result(payload: bytes) -> tuple[int, bool]:
    if len(payload) != 3 or payload[2] not in (0, 1):
        raise MalformedPayload(f"ROUND_RESULT inválido: {payload.hex()}")
    return int.from_bytes(payload[:2], "little"), payload[2] == 1


def encode_session_result(accepted: bool, rounds_passed: int, rounds: int) -> bytes:
    return bytes([1 if accepted else 0]) + rounds_passed.to_bytes(2, "little") + rounds.to_bytes(2, "little")


def decode_session_result(payload: bytes) -> tuple[bool, int, int]:
    if len(payload) != 5 or payload[0] not in (0, 1):
        raise MalformedPayload(f"SESSION_RESULT inválido: {payload.hex()}")
    return payload[0] == 1, int.from_bytes(payload[1:3], "little"), int.from_bytes(payload[3:5], "little")


def encode_error(code: ErrorCode | int, message: str = "") -> bytes:
    return bytes([int(code)]) + message.encode("utf-8")[:1024]


def decode_error(payload: bytes) -> tuple[int, str]:
    if not payload:
        raise MalformedPayload("ERROR sem código")
    return payload[0], payload[1:].decode("utf-8", errors="replace")
