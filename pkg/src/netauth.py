# src/netauth.py
from __future__ import annotations

import logging
import random
import re
import socket
import socketserver
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

from . import config
from .errors import (
    ConfigError,
    ConnectionFailed,
    FingerprintMismatch,
    PeerTimeout,
    ProtocolError,
    ProtocolViolation,
    RemoteError,
    WireError,
)
from .keys import (
    ParamSet,
    PrivateKey,
    PublicKey,
    derive_public,
    load_params,
    load_private_key,
    load_public_key,
    load_registry,
)
from .protocol import ProverSession, RoundRecord, SessionConfig, VerifierSession, write_transcript
from .randomness import RandomSource
from .scheduler import setup_logging, start_maintenance, timestamp_tag
from .wire import (
    ErrorCode,
    Hello,
    MessageType,
    decode_challenge,
    decode_error,
    decode_hello,
    decode_matrix,
    decode_round_result,
    decode_session_result,
    encode_challenge,
    encode_error,
    encode_hello,
    encode_matrix,
    encode_round_result,
    encode_session_result,
    frame_message,
    parse_frame,
    peek_hello,
)

log = logging.getLogger(__name__)

MAX_ROUNDS = 0xFFFF


@dataclass(frozen=True)
class PeerConfig:
    params_path: str
    key_path: str
    host: str = "127.0.0.1"
    port: int = 0
    peer_pub_path: Optional[str] = None   # lado do provador
    registry_dir: Optional[str] = None    # lado do verificador
    rounds: int = config.DEFAULT_ROUNDS
    timeout_secs: float = config.TIMEOUT_SECS
    transcript_path: Optional[str] = None
    transcript_dir: str = config.TRANSCRIPT_DIR
    connect_retries: int = config.CONNECT_RETRIES
    backoff_base: float = config.BACKOFF_BASE
    seed: Optional[int] = None


@dataclass
class AuthOutcome:
    peer_id: str
    accepted: bool
    rounds_passed: int
    rounds: int
    transcript_path: Optional[str] = None
    error: Optional[str] = None

    def to_json(self) -> Dict[str, object]:
        return {
            "peer_id": self.peer_id,
            "accepted": self.accepted,
            "rounds_passed": self.rounds_passed,
            "rounds": self.rounds,
            "transcript": self.transcript_path,
            "error": self.error,
        }


def parse_hostport(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"esperado HOST:PORT, recebido {text!r}")
    return host or "127.0.0.1", int(port)


def _safe_name(owner_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", owner_id)[:64] or "peer"


def _send(sock: socket.socket, t: MessageType, payload: bytes) -> None:
    sock.sendall(frame_message(t, payload))


class FrameReader:
    """
    Leitura direta do socket com prazo por frame: `timeout_secs` vale para o
    frame inteiro, não para cada recv (um peer pingando um byte por vez não
    segura a conexão).
    """

    def __init__(self, sock: socket.socket, timeout_secs: float):
        self.sock = sock
        self.timeout_secs = timeout_secs
        self._deadline = time.monotonic() + timeout_secs

    def arm(self) -> None:
        self._deadline = time.monotonic() + self.timeout_secs

    def read(self, n: int) -> bytes:
        remaining = self._deadline - time.monotonic()
        if remaining <= 0:
            raise socket.timeout(f"frame não chegou em {self.timeout_secs}s")
        self.sock.settimeout(remaining)
        try:
            return self.sock.recv(n)
        finally:
            # sendall usa o timeout cheio, não o que sobrou do frame
            self.sock.settimeout(self.timeout_secs)


def _expect(frames: FrameReader, wanted: MessageType) -> bytes:
    """Lê um frame; ERROR vira RemoteError e qualquer outro tipo fora de ordem é violação."""
    frames.arm()
    t, payload = parse_frame(frames)
    if t == MessageType.ERROR:
        code, message = decode_error(payload)
        raise RemoteError(code, message)
    if t != wanted:
        raise ProtocolViolation(f"esperado {wanted.name}, recebido {t.name}")
    return payload


# =============================================================================
# VERIFICADOR (Bob)
# =============================================================================
class VerifierServer(socketserver.ThreadingTCPServer):
    """Uma sessão por conexão; estado de sessão isolado por thread."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(
        self,
        address: tuple[str, int],
        params: ParamSet,
        priv: PrivateKey,
        registry: Dict[str, PublicKey],
        cfg: PeerConfig,
    ):
        self.params = params
        self.priv = priv
        self.pub = derive_public(params, priv)
        self.cfg = cfg
        self.session_cfg = SessionConfig(rounds=cfg.rounds)
        self._registry = dict(registry)
        self._lock = threading.Lock()
        self._conn_counter = 0
        self.outcomes: List[AuthOutcome] = []
        super().__init__(address, VerifierHandler)

    def lookup(self, owner_id: str) -> Optional[PublicKey]:
        with self._lock:
            return self._registry.get(owner_id)

    def reload_registry(self) -> int:
        if not self.cfg.registry_dir:
            return len(self._registry)
        fresh = load_registry(self.cfg.registry_dir, self.params)
        with self._lock:
            self._registry = fresh
        return len(fresh)

    def next_rng(self) -> RandomSource:
        with self._lock:
            self._conn_counter += 1
            n = self._conn_counter
        return RandomSource(None if self.cfg.seed is None else self.cfg.seed + n)

    def record_outcome(self, outcome: AuthOutcome) -> None:
        with self._lock:
            self.outcomes.append(outcome)


class VerifierHandler(socketserver.StreamRequestHandler):
    server: VerifierServer

    def setup(self):
        super().setup()
        self.frames = FrameReader(self.request, self.server.cfg.timeout_secs)

    def _error(self, code: ErrorCode, message: str) -> None:
        try:
            _send(self.request, MessageType.ERROR, encode_error(code, message))
        except OSError:
            pass

    def handle(self):
        srv = self.server
        peer = "%s:%s" % self.client_address[:2]
        prover_id = "?"
        try:
            prover_id, verifier_session = self._handshake()
            if verifier_session is None:
                return
            outcome = self._run_rounds(prover_id, verifier_session)
            srv.record_outcome(outcome)
            log.info("%s %s ('%s'): %d/%d rodadas → %s",
                     "✅" if outcome.accepted else "❌", peer, prover_id,
                     outcome.rounds_passed, outcome.rounds, outcome.transcript_path)
        except socket.timeout:
            log.warning("⏱️ %s ('%s'): timeout, conexão encerrada como falha", peer, prover_id)
            srv.record_outcome(AuthOutcome(prover_id, False, 0, srv.session_cfg.rounds, error="timeout"))
        except (WireError, ProtocolViolation) as e:
            log.warning("⚠️ %s ('%s'): frame inválido: %s", peer, prover_id, e)
            self._error(ErrorCode.MALFORMED, str(e))
            srv.record_outcome(AuthOutcome(prover_id, False, 0, srv.session_cfg.rounds, error=str(e)))
        except ProtocolError as e:
            log.warning("⚠️ %s ('%s'): sessão abortada: %s", peer, prover_id, e)
            srv.record_outcome(AuthOutcome(prover_id, False, 0, srv.session_cfg.rounds, error=str(e)))
        except OSError as e:
            log.warning("⚠️ %s ('%s'): conexão perdida: %s", peer, prover_id, e)

    def _handshake(self) -> tuple[str, Optional[VerifierSession]]:
        srv = self.server
        payload = _expect(self.frames, MessageType.PROVER_HELLO)
        owner_id, fingerprint = peek_hello(payload)
        if fingerprint != srv.params.fingerprint:
            log.warning("🚫 '%s': fingerprint %s ≠ %s", owner_id, fingerprint.hex(), srv.params.fingerprint.hex())
            self._error(ErrorCode.FINGERPRINT_MISMATCH, "parâmetros diferentes")
            srv.record_outcome(AuthOutcome(owner_id, False, 0, srv.session_cfg.rounds, error="fingerprint"))
            return owner_id, None
        hello = decode_hello(payload, srv.params.d, srv.params.mod, with_rounds=False)
        registered = srv.lookup(hello.owner_id)
        if registered is None:
            log.warning("🚫 Provador desconhecido: '%s'", hello.owner_id)
            self._error(ErrorCode.UNKNOWN_PROVER, f"id '{hello.owner_id}' não registrado")
            srv.record_outcome(AuthOutcome(hello.owner_id, False, 0, srv.session_cfg.rounds, error="unknown"))
            return hello.owner_id, None
        if hello.public != registered.g_x:
            log.warning("⚠️ '%s' anunciou chave pública diferente da registrada; usando a registrada", hello.owner_id)

        reply = Hello(srv.pub.owner_id, srv.params.fingerprint, srv.pub.g_x, srv.session_cfg.rounds)
        _send(self.request, MessageType.VERIFIER_HELLO, encode_hello(reply))
        session = VerifierSession(srv.priv, registered, srv.params, srv.session_cfg, srv.next_rng())
        return hello.owner_id, session

    def _run_rounds(self, prover_id: str, session: VerifierSession) -> AuthOutcome:
        srv = self.server
        d, mod = srv.params.d, srv.params.mod
        while not session.finished:
            S = decode_matrix(_expect(self.frames, MessageType.WITNESS), d, mod)
            b, Q = session.challenge(S)
            _send(self.request, MessageType.CHALLENGE, encode_challenge(b, Q))
            R = decode_matrix(_expect(self.frames, MessageType.RESPONSE), d, mod)
            record = session.verify(R)
            _send(self.request, MessageType.ROUND_RESULT, encode_round_result(record.round_index, record.verdict))

        verdict = session.verdict()
        _send(self.request, MessageType.SESSION_RESULT,
              encode_session_result(verdict.accepted, verdict.rounds_passed, verdict.rounds))
        path = Path(srv.cfg.transcript_dir) / f"{_safe_name(prover_id)}_{timestamp_tag()}.jsonl"
        out = write_transcript(path, verdict.records)
        return AuthOutcome(prover_id, verdict.accepted, verdict.rounds_passed, verdict.rounds, out)


def build_verifier_server(cfg: PeerConfig) -> VerifierServer:
    """Carrega params, chave de Bob e registry (todos no mesmo fingerprint) e faz o bind."""
    if not cfg.registry_dir:
        raise ValueError("verify-server precisa de --registry")
    if not 1 <= cfg.rounds <= MAX_ROUNDS:
        raise ConfigError(f"rounds fora de [1, {MAX_ROUNDS}] (o VERIFIER_HELLO leva t em 2 bytes): {cfg.rounds}")
    params = load_params(cfg.params_path)
    priv = load_private_key(cfg.key_path, params)
    registry = load_registry(cfg.registry_dir, params)
    server = VerifierServer((cfg.host, cfg.port), params, priv, registry, cfg)
    log.info("🛡️ Verificador '%s' ouvindo em %s:%d (t=%d, %d provador(es) registrados)",
             priv.owner_id, *server.server_address[:2], cfg.rounds, len(registry))
    return server


def serve_verifier(cfg: PeerConfig, *, ready: Optional[threading.Event] = None) -> None:
    """Roda até ser interrompido (Ctrl+C ou shutdown())."""
    setup_logging()
    config.ensure_dirs()
    server = build_verifier_server(cfg)
    scheduler = start_maintenance(server, transcript_dir=cfg.transcript_dir)
    if ready is not None:
        ready.set()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        log.info("🛑 Verificador interrompido.")
    finally:
        scheduler.shutdown(wait=False)
        server.server_close()


# =============================================================================
# PROVADOR (Alice)
# =============================================================================
def _connect(cfg: PeerConfig) -> socket.socket:
    """Conecta com retry/backoff exponencial e jitter de ±20%."""
    attempt = 0
    while True:
        attempt += 1
        try:
            return socket.create_connection((cfg.host, cfg.port), timeout=cfg.timeout_secs)
        except OSError as e:
            if attempt <= cfg.connect_retries:
                wait = cfg.backoff_base ** (attempt - 1) * random.uniform(0.8, 1.2)
                log.warning("⚠️ Conexão com %s:%d falhou: %s (tentativa %d/%d). Esperando %.2fs…",
                            cfg.host, cfg.port, e, attempt, cfg.connect_retries, wait)
                time.sleep(wait)
                continue
            log.error("❌ Sem conexão com %s:%d: %s", cfg.host, cfg.port, e)
            raise ConnectionFailed(f"{cfg.host}:{cfg.port}: {e}")


def _prover_rounds(
    sock: socket.socket,
    stream: FrameReader,
    session: ProverSession,
    params: ParamSet,
    rounds: int,
) -> tuple[List[RoundRecord], bool, int]:
    d, mod = params.d, params.mod
    records: List[RoundRecord] = []
    for i in range(rounds):
        S = session.witness()
        _send(sock, MessageType.WITNESS, encode_matrix(S))
        b, Q = decode_challenge(_expect(stream, MessageType.CHALLENGE), d, mod)
        R = session.respond(b, Q)
        _send(sock, MessageType.RESPONSE, encode_matrix(R))
        idx, verdict = decode_round_result(_expect(stream, MessageType.ROUND_RESULT))
        if idx != i:
            raise ProtocolViolation(f"ROUND_RESULT da rodada {idx}, esperado {i}")
        records.append(RoundRecord(i, S, Q, b, R, verdict))
    accepted, passed, t = decode_session_result(_expect(stream, MessageType.SESSION_RESULT))
    if t != rounds:
        raise ProtocolViolation(f"SESSION_RESULT com t={t}, anunciado {rounds}")
    return records, accepted, passed


def run_prover(cfg: PeerConfig) -> AuthOutcome:
    if not cfg.peer_pub_path:
        raise ValueError("prove precisa de --peer-pub")
    params = load_params(cfg.params_path)
    priv = load_private_key(cfg.key_path, params)
    verifier_pub = load_public_key(cfg.peer_pub_path, params)
    own_pub = derive_public(params, priv)
    rng = RandomSource(cfg.seed)

    sock = _connect(cfg)
    try:
        stream = FrameReader(sock, cfg.timeout_secs)
        _send(sock, MessageType.PROVER_HELLO,
              encode_hello(Hello(priv.owner_id, params.fingerprint, own_pub.g_x)))
        payload = _expect(stream, MessageType.VERIFIER_HELLO)
        _, fingerprint = peek_hello(payload)
        if fingerprint != params.fingerprint:
            raise FingerprintMismatch(f"verificador usa parâmetros {fingerprint.hex()}")
        hello = decode_hello(payload, params.d, params.mod, with_rounds=True)
        if hello.public != verifier_pub.g_x:
            log.warning("⚠️ Verificador '%s' anunciou chave diferente da configurada; usando a configurada",
                        hello.owner_id)
        log.info("🤝 Handshake com '%s': t=%d", hello.owner_id, hello.rounds)

        session = ProverSession(priv, verifier_pub, params, rng)
        records, accepted, passed = _prover_rounds(sock, stream, session, params, hello.rounds)
    except socket.timeout:
        raise PeerTimeout(f"verificador {cfg.host}:{cfg.port} não respondeu em {cfg.timeout_secs}s")
    except ConnectionError as e:
        raise ProtocolError(f"conexão encerrada pelo verificador: {e}")
    finally:
        sock.close()

    path = cfg.transcript_path or str(Path(config.TRANSCRIPT_DIR) /
                                      f"prover_{_safe_name(priv.owner_id)}_{timestamp_tag()}.jsonl")
    out = write_transcript(path, records)
    log.info("%s Autenticação de '%s' junto a '%s': %d/%d",
             "✅" if accepted else "❌", priv.owner_id, hello.owner_id, passed, hello.rounds)
    return AuthOutcome(hello.owner_id, accepted, passed, hello.rounds, out)
