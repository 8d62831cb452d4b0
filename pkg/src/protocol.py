# src/protocol.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from . import config
from .errors import (
    ArtifactIOError,
    ConfigError,
    ProtocolViolation,
    SingularChallenge,
    SingularResponse,
    SingularWitness,
)
from .file_utils import read_jsonl, write_jsonl_atomic
from .keys import ParamSet, PrivateKey, PublicKey, derive_public, require_fingerprint
from .matrix_core import Matrix, mat_det, mat_inv, mat_mul, mat_pow, sample_invertible
from .randomness import RandomSource
from .wire import matrix_from_hex, matrix_to_hex

log = logging.getLogger(__name__)


class AcceptPolicy(str, Enum):
    ALL_ROUNDS = "all-rounds-must-pass"


@dataclass(frozen=True)
class SessionConfig:
    rounds: int = config.DEFAULT_ROUNDS
    accept_policy: AcceptPolicy = AcceptPolicy.ALL_ROUNDS

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigError(f"rounds deve ser >= 1 (recebido {self.rounds})")


@dataclass(frozen=True)
class ProverRoundState:
    k: int
    S: Matrix
    S_inv: Matrix
    A_pow_neg_k: Matrix
    A_pow_neg_n: Matrix


@dataclass(frozen=True)
class VerifierRoundState:
    b: int
    Q: Matrix
    S_received: Matrix
    target: Matrix
    h_mask: Optional[Matrix] = None
    # False quando o witness chegou singular: a rodada já está perdida
    witness_ok: bool = True


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    S: Matrix
    Q: Matrix
    b: int
    R: Matrix
    verdict: bool

    def to_json(self) -> Dict[str, Any]:
        return {
            "round": self.round_index,
            "S": matrix_to_hex(self.S),
            "b": self.b,
            "Q": matrix_to_hex(self.Q),
            "R": matrix_to_hex(self.R),
            "verdict": self.verdict,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any], params: ParamSet) -> "RoundRecord":
        d, mod = params.d, params.mod
        return cls(
            round_index=int(data["round"]),
            S=matrix_from_hex(data["S"], d, mod),
            Q=matrix_from_hex(data["Q"], d, mod),
            b=int(data["b"]),
            R=matrix_from_hex(data["R"], d, mod),
            verdict=bool(data["verdict"]),
        )


@dataclass
class SessionVerdict:
    accepted: bool
    rounds_passed: int
    records: List[RoundRecord] = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return len(self.records)

    def to_json(self) -> Dict[str, Any]:
        return {
            "accepted": self.accepted,
            "rounds_passed": self.rounds_passed,
            "rounds": self.rounds,
            "records": [r.to_json() for r in self.records],
        }


@dataclass(frozen=True)
class ForgeryOutcome:
    record: RoundRecord
    residual: Matrix
    target: Matrix

    @property
    def accepted(self) -> bool:
        return self.record.verdict


def session_target(params: ParamSet, verifier_priv: PrivateKey) -> Matrix:
    """G_B·G, fixo por (verificador, sessão)."""
    return mat_mul(derive_public(params, verifier_priv).g_x, params.G)


def _check_bit(b: int) -> int:
    if b not in (0, 1):
        raise ProtocolViolation(f"bit de desafio inválido: {b}")
    return b


# ---------------------------------------------------------------------
# Rodada: witness → challenge → response → verify
# ---------------------------------------------------------------------
def witness_create(
    priv: PrivateKey,
    peer_pub: PublicKey,
    params: ParamSet,
    rng: RandomSource,
    *,
    k: Optional[int] = None,
) -> tuple[ProverRoundState, Matrix]:
    """S = A^k · G_B · A^{-m}, com k novo a cada chamada."""
    require_fingerprint(params, priv, peer_pub)
    if k is None:
        k = rng.randint(1, params.exponent_bound)
    elif not 1 <= k <= params.exponent_bound:
        raise ConfigError(f"k fora de [1, {params.exponent_bound}]: {k}")
    S = mat_mul(mat_mul(priv.power(k), peer_pub.g_x), priv.power(-params.m))
    state = ProverRoundState(
        k=k,
        S=S,
        S_inv=mat_inv(S),
        A_pow_neg_k=priv.power(-k),
        A_pow_neg_n=priv.power(-params.n),
    )
    return state, S


def challenge_create(
    verifier_priv: PrivateKey,
    S: Matrix,
    prover_pub: PublicKey,
    params: ParamSet,
    rng: RandomSource,
    *,
    force_b: Optional[int] = None,
    h: Optional[Matrix] = None,
    audit: bool = False,
    target: Optional[Matrix] = None,
) -> VerifierRoundState:
    """
    b = 0: Q = B^m · H · B^n com H inversível novo.
    b = 1: Q = B^m · S · G_A · B^n.
    `force_b` e `h` são ganchos de teste.
    """
    require_fingerprint(params, verifier_priv, prover_pub)
    if mat_det(S).value == 0:
        raise SingularWitness("witness singular recebido")
    b = rng.bit() if force_b is None else _check_bit(force_b)
    B_m = verifier_priv.power(params.m)
    B_n = verifier_priv.power(params.n)
    H = None
    if b == 0:
        if h is None:
            H = sample_invertible(params.mod, params.d, rng)
        elif mat_det(h).value == 0:
            raise ConfigError("H forçado precisa ser inversível")
        else:
            H = h
        Q = mat_mul(mat_mul(B_m, H), B_n)
    else:
        Q = mat_mul(mat_mul(mat_mul(B_m, S), prover_pub.g_x), B_n)
    if target is None:
        target = session_target(params, verifier_priv)
    return VerifierRoundState(
        b=b,
        Q=Q,
        S_received=S,
        target=target,
        h_mask=H if (b == 0 and audit) else None,
    )


def response_create(state: ProverRoundState, challenge_b: int, Q: Matrix, params: ParamSet) -> Matrix:
    """b = 0: R = S^{-m} Q S^{-n};  b = 1: R = A^{-k} Q A^{-n}."""
    b = _check_bit(challenge_b)
    if mat_det(Q).value == 0:
        raise SingularChallenge("Q singular recebido")
    if b == 0:
        s_neg_m = mat_pow(state.S_inv, params.m)
        s_neg_n = s_neg_m if params.n == params.m else mat_pow(state.S_inv, params.n)
        return mat_mul(mat_mul(s_neg_m, Q), s_neg_n)
    return mat_mul(mat_mul(state.A_pow_neg_k, Q), state.A_pow_neg_n)


def _equation_holds(
    b: int,
    S: Matrix,
    Q: Matrix,
    R: Matrix,
    verifier_priv: PrivateKey,
    params: ParamSet,
    target: Matrix,
) -> bool:
    if b == 0:
        s_m = mat_pow(S, params.m)
        s_n = s_m if params.n == params.m else mat_pow(S, params.n)
        return mat_mul(mat_mul(s_m, R), s_n) == Q
    lhs = mat_mul(mat_mul(verifier_priv.power(-params.m), R), verifier_priv.power(-params.n))
    return lhs == target


def round_verify(vstate: VerifierRoundState, R: Matrix, verifier_priv: PrivateKey, params: ParamSet) -> bool:
    """b = 0: Q == S^m R S^n;  b = 1: G_B·G == B^{-m} R B^{-n}. Igualdade estrita."""
    if mat_det(R).value == 0:
        raise SingularResponse("resposta R singular")
    return _equation_holds(vstate.b, vstate.S_received, vstate.Q, R, verifier_priv, params, vstate.target)


def record_satisfies(
    record: RoundRecord,
    verifier_priv: PrivateKey,
    params: ParamSet,
    target: Optional[Matrix] = None,
) -> bool:
    """Avalia a equação de validação sobre uma 4-upla registrada (real, forjada ou simulada)."""
    if target is None:
        target = session_target(params, verifier_priv)
    return _equation_holds(record.b, record.S, record.Q, record.R, verifier_priv, params, target)


# ---------------------------------------------------------------------
# Máquinas de estado por sessão (usadas em memória e na rede)
# ---------------------------------------------------------------------
class ProverSession:
    """Alice: witness() e respond(), alternados, uma rodada por vez."""

    def __init__(
        self,
        priv: PrivateKey,
        verifier_pub: PublicKey,
        params: ParamSet,
        rng: RandomSource,
        *,
        force_k: Optional[int] = None,
        forged_witness: Optional[Matrix] = None,
    ):
        require_fingerprint(params, priv, verifier_pub)
        self.priv = priv
        self.verifier_pub = verifier_pub
        self.params = params
        self.rng = rng
        self._force_k = force_k
        self._forged_witness = forged_witness
        self._state: Optional[ProverRoundState] = None

    def witness(self, override: Optional[Matrix] = None) -> Matrix:
        """`override` troca o S desta rodada (Mallory ou testes); a resposta b = 0 acompanha."""
        if self._state is not None:
            raise ProtocolViolation("witness já emitido nesta rodada")
        state, S = witness_create(self.priv, self.verifier_pub, self.params, self.rng, k=self._force_k)
        forged = override if override is not None else self._forged_witness
        if forged is not None:
            S = forged
            # S singular: a rodada já está perdida, a resposta não importa
            S_inv = mat_inv(S) if S.is_invertible() else state.S_inv
            state = replace(state, S=S, S_inv=S_inv)
        self._state = state
        return S

    def respond(self, b: int, Q: Matrix) -> Matrix:
        if self._state is None:
            raise ProtocolViolation("desafio recebido antes do witness")
        state, self._state = self._state, None
        return response_create(state, b, Q, self.params)


class VerifierSession:
    """Bob: challenge() e verify(), alternados, até completar t rodadas."""

    def __init__(
        self,
        priv: PrivateKey,
        prover_pub: PublicKey,
        params: ParamSet,
        cfg: SessionConfig,
        rng: RandomSource,
        *,
        force_b: Optional[int] = None,
        audit: bool = False,
    ):
        require_fingerprint(params, priv, prover_pub)
        self.priv = priv
        self.prover_pub = prover_pub
        self.params = params
        self.cfg = cfg
        self.rng = rng
        self.target = session_target(params, priv)
        self.records: List[RoundRecord] = []
        self._force_b = force_b
        self._audit = audit
        self._state: Optional[VerifierRoundState] = None

    @property
    def round_index(self) -> int:
        return len(self.records)

    @property
    def finished(self) -> bool:
        return len(self.records) >= self.cfg.rounds

    def _fallback_state(self, S: Matrix) -> VerifierRoundState:
        # mantém a ordem das mensagens; a rodada já está reprovada
        H = sample_invertible(self.params.mod, self.params.d, self.rng)
        Q = mat_mul(mat_mul(self.priv.power(self.params.m), H), self.priv.power(self.params.n))
        return VerifierRoundState(b=0, Q=Q, S_received=S, target=self.target, witness_ok=False)

    def challenge(self, S: Matrix) -> tuple[int, Matrix]:
        if self.finished:
            raise ProtocolViolation("sessão já concluída")
        if self._state is not None:
            raise ProtocolViolation("witness duplicado na mesma rodada")
        try:
            state = challenge_create(
                self.priv, S, self.prover_pub, self.params, self.rng,
                force_b=self._force_b, audit=self._audit, target=self.target,
            )
        except SingularWitness:
            log.warning("⚠️ Rodada %d: witness singular, rodada reprovada", self.round_index)
            state = self._fallback_state(S)
        self._state = state
        return state.b, state.Q

    def verify(self, R: Matrix) -> RoundRecord:
        if self._state is None:
            raise ProtocolViolation("resposta recebida antes do desafio")
        state, self._state = self._state, None
        verdict = False
        if state.witness_ok:
            try:
                verdict = round_verify(state, R, self.priv, self.params)
            except SingularResponse:
                log.warning("⚠️ Rodada %d: resposta singular, rodada reprovada", self.round_index)
        record = RoundRecord(self.round_index, state.S_received, state.Q, state.b, R, verdict)
        self.records.append(record)
        log.debug("rodada %d: b=%d verdict=%s", record.round_index, record.b, verdict)
        return record

    def verdict(self) -> SessionVerdict:
        passed = sum(1 for r in self.records if r.verdict)
        accepted = len(self.records) == self.cfg.rounds and passed == self.cfg.rounds
        return SessionVerdict(accepted=accepted, rounds_passed=passed, records=list(self.records))


def session_run(
    prover_priv: PrivateKey,
    prover_pub: PublicKey,
    verifier_priv: PrivateKey,
    verifier_pub: PublicKey,
    params: ParamSet,
    cfg: SessionConfig,
    rng: RandomSource,
    *,
    force_b: Optional[int] = None,
    force_k: Optional[int] = None,
    forged_witness: Optional[Matrix] = None,
) -> SessionVerdict:
    """t rodadas independentes em memória; aceita sse todas passam."""
    require_fingerprint(params, prover_priv, prover_pub, verifier_priv, verifier_pub)
    prover = ProverSession(prover_priv, verifier_pub, params, rng,
                           force_k=force_k, forged_witness=forged_witness)
    verifier = VerifierSession(verifier_priv, prover_pub, params, cfg, rng, force_b=force_b)
    while not verifier.finished:
        S = prover.witness()
        b, Q = verifier.challenge(S)
        R = prover.respond(b, Q)
        verifier.verify(R)
    verdict = verifier.verdict()
    log.info("%s Sessão '%s' → '%s': %d/%d rodadas",
             "✅" if verdict.accepted else "❌",
             prover_pub.owner_id, verifier_pub.owner_id, verdict.rounds_passed, cfg.rounds)
    return verdict


# ---------------------------------------------------------------------
# Mallory: chave inventada tentando se passar pela vítima
# ---------------------------------------------------------------------
def mallory_forge(
    fake_priv: PrivateKey,
    true_pub: PublicKey,
    verifier_priv: PrivateKey,
    params: ParamSet,
    rng: RandomSource,
    *,
    k: Optional[int] = None,
) -> ForgeryOutcome:
    """
    Uma rodada b = 1 com S* = A*^k G_B A*^{-m} e R* = A*^{-k} Q A*^{-n}.
    O resíduo B^{-m} R* B^{-n} = G_B (A*^{-m} A^m) G (A^n A*^{-n}) só volta
    a G_B·G se A* for equivalente à chave verdadeira.
    """
    verifier_pub = derive_public(params, verifier_priv)
    state, S = witness_create(fake_priv, verifier_pub, params, rng, k=k)
    vstate = challenge_create(verifier_priv, S, true_pub, params, rng, force_b=1)
    R = response_create(state, 1, vstate.Q, params)
    residual = mat_mul(mat_mul(verifier_priv.power(-params.m), R), verifier_priv.power(-params.n))
    verdict = residual == vstate.target
    record = RoundRecord(0, S, vstate.Q, 1, R, verdict)
    return ForgeryOutcome(record=record, residual=residual, target=vstate.target)


def cheating_session(
    fake_priv: PrivateKey,
    true_pub: PublicKey,
    verifier_priv: PrivateKey,
    params: ParamSet,
    rounds: int,
    rng: RandomSource,
) -> SessionVerdict:
    """
    Estratégia completa de Mallory contra um verificador honesto. A cada rodada
    ela aposta no bit antes de se comprometer: apostando em b = 0 manda um S*
    aleatório em GL, apostando em b = 1 manda o witness de A*. Toda rodada b = 0
    passa (qualquer S invertível responde certo); b = 1 só passa com A*
    equivalente à chave verdadeira e aposta certa.
    """
    verifier_pub = derive_public(params, verifier_priv)
    require_fingerprint(params, fake_priv, true_pub, verifier_priv)
    prover = ProverSession(fake_priv, verifier_pub, params, rng)
    verifier = VerifierSession(verifier_priv, true_pub, params, SessionConfig(rounds=rounds), rng)
    while not verifier.finished:
        guess = rng.bit()
        S_star = sample_invertible(params.mod, params.d, rng) if guess == 0 else None
        b, Q = verifier.challenge(prover.witness(S_star))
        verifier.verify(prover.respond(b, Q))
    verdict = verifier.verdict()
    log.info("🎭 Mallory como '%s': %d/%d rodadas", true_pub.owner_id, verdict.rounds_passed, rounds)
    return verdict


# ---------------------------------------------------------------------
# Simulador (sem a chave do provador, com a do verificador)
# ---------------------------------------------------------------------
def simulate_transcript(
    params: ParamSet,
    prover_pub: PublicKey,
    verifier_priv: PrivateKey,
    verifier_pub: PublicKey,
    rounds: int,
    rng: RandomSource,
) -> List[RoundRecord]:
    """
    b sorteado primeiro.
      b = 0: S*, Q uniformes em GL; R* = S*^{-m} Q S*^{-n}
      b = 1: S = G_B G G_A^{-1}; Q = B^m S G_A B^n; R = Q
    """
    if rounds < 1:
        raise ConfigError(f"rounds deve ser >= 1 (recebido {rounds})")
    require_fingerprint(params, prover_pub, verifier_priv, verifier_pub)
    target = mat_mul(verifier_pub.g_x, params.G)
    g_a = prover_pub.g_x
    g_a_inv = mat_inv(g_a)
    B_m = verifier_priv.power(params.m)
    B_n = verifier_priv.power(params.n)

    records: List[RoundRecord] = []
    for i in range(rounds):
        b = rng.bit()
        if b == 0:
            S = sample_invertible(params.mod, params.d, rng)
            Q = sample_invertible(params.mod, params.d, rng)
            S_inv = mat_inv(S)
            R = mat_mul(mat_mul(mat_pow(S_inv, params.m), Q), mat_pow(S_inv, params.n))
        else:
            S = mat_mul(target, g_a_inv)
            Q = mat_mul(mat_mul(mat_mul(B_m, S), g_a), B_n)
            R = Q
        verdict = _equation_holds(b, S, Q, R, verifier_priv, params, target)
        records.append(RoundRecord(i, S, Q, b, R, verdict))
    log.info("🎭 Simulador: %d rodadas geradas (b=1 em %d)", rounds, sum(r.b for r in records))
    return records


# ---------------------------------------------------------------------
# Transcript (JSON Lines)
# ---------------------------------------------------------------------
def write_transcript(path: str | Path, records: List[RoundRecord]) -> str:
    out = write_jsonl_atomic(path, (r.to_json() for r in records))
    log.info("📝 Transcript com %d rodadas salvo em %s", len(records), out)
    return out


def read_transcript(path: str | Path, params: ParamSet) -> List[RoundRecord]:
    rows = read_jsonl(path)
    try:
        return [RoundRecord.from_json(r, params) for r in rows]
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactIOError(f"{path}: transcript inválido: {e}")
