# src/main.py
"""
CLI do toolkit de identificação zero-knowledge sobre GL(d, F_p).

    python -m src.main <comando> [flags]

Saída de máquina (JSON) vai para stdout; resumos humanos vão para stderr via logging.
`--seed` torna tudo reprodutível bit a bit. Só para testes e demos, nunca para uso real.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from . import config
from .bench import DEFAULT_DIMS, bench_to_json, run_bench
from .errors import EXIT_IO, EXIT_OK, EXIT_REJECT, EXIT_USAGE, ZkpError
from .gsdp_oracle import attack_recover_key, check_recovered_keys
from .keys import (
    PrivateKey,
    derive_public,
    gen_keypair,
    gen_params,
    keyspace_cardinality,
    load_params,
    load_private_key,
    load_public_key,
    params_to_json,
    public_key_to_json,
    save_params,
    save_private_key,
    save_public_key,
)
from .matrix_core import sample_distinct_diagonal
from .netauth import PeerConfig, parse_hostport, run_prover, serve_verifier
from .protocol import (
    SessionConfig,
    cheating_session,
    mallory_forge,
    record_satisfies,
    session_run,
    simulate_transcript,
    write_transcript,
)
from .randomness import RandomSource

log = logging.getLogger(__name__)


def _emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2))


def _rng(args: argparse.Namespace) -> RandomSource:
    if args.seed is not None:
        log.warning("🎲 --seed=%d: modo determinístico, inseguro para uso real.", args.seed)
    return RandomSource(args.seed)


def _parse_factorization(text: Optional[str]) -> Optional[Dict[int, int]]:
    """'2:3,5:1,7' → {2: 3, 5: 1, 7: 1}."""
    if not text:
        return None
    out: Dict[int, int] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        prime, _, exp = part.partition(":")
        out[int(prime)] = int(exp) if exp else 1
    return out


# =============================================================================
# Comandos
# =============================================================================
def cmd_params(args) -> int:
    params = gen_params(
        args.prime, args.dim, args.bound, strict_order=args.strict, rng=_rng(args),
        primitive_factorization=_parse_factorization(args.factorization),
    )
    if args.out:
        save_params(args.out, params)
    _emit(params_to_json(params))
    return EXIT_OK


def cmd_keygen(args) -> int:
    params = load_params(args.params)
    priv, pub = gen_keypair(params, args.id, _rng(args))
    save_private_key(args.out, priv)
    if args.pub_out:
        save_public_key(args.pub_out, pub)
    _emit(public_key_to_json(pub))
    return EXIT_OK


def cmd_pubkey(args) -> int:
    params = load_params(args.params)
    pub = derive_public(params, load_private_key(args.key, params))
    if args.out:
        save_public_key(args.out, pub)
    _emit(public_key_to_json(pub))
    return EXIT_OK


def cmd_session_local(args) -> int:
    params = load_params(args.params)
    prover = load_private_key(args.prover_key, params)
    verifier = load_private_key(args.verifier_key, params)
    verdict = session_run(
        prover, derive_public(params, prover),
        verifier, derive_public(params, verifier),
        params, SessionConfig(rounds=args.rounds), _rng(args),
    )
    if args.transcript:
        write_transcript(args.transcript, verdict.records)
    _emit(verdict.to_json())
    return EXIT_OK if verdict.accepted else EXIT_REJECT


def cmd_simulate(args) -> int:
    params = load_params(args.params)
    prover_pub = load_public_key(args.prover_pub, params)
    verifier = load_private_key(args.verifier_key, params)
    records = simulate_transcript(params, prover_pub, verifier, derive_public(params, verifier),
                                  args.rounds, _rng(args))
    if args.out:
        write_transcript(args.out, records)
    ones = sum(r.b for r in records)
    _emit({
        "rounds": len(records),
        "all_satisfy": all(record_satisfies(r, verifier, params) for r in records),
        "b1_fraction": ones / len(records),
        "out": args.out,
    })
    return EXIT_OK


def _fake_key(args, params, owner_id: str, rng: RandomSource) -> PrivateKey:
    if args.fake_key:
        return load_private_key(args.fake_key, params)
    return PrivateKey.from_lambdas(params, owner_id, sample_distinct_diagonal(params.mod, params.d, rng))


def cmd_attack(args) -> int:
    params = load_params(args.params)
    victim = load_public_key(args.victim_pub, params)
    verifier = load_private_key(args.verifier_key, params)
    rng = _rng(args)
    fake = _fake_key(args, params, victim.owner_id, rng)

    forgeries: List[Dict[str, Any]] = []
    for i in range(args.rounds):
        outcome = mallory_forge(fake, victim, verifier, params, rng)
        forgeries.append({"round": i, "accepted": outcome.accepted})
    passed = sum(1 for f in forgeries if f["accepted"])
    log.info("🦹 Mallory: %d/%d rodadas b=1 forjadas aceitas", passed, args.rounds)

    session = cheating_session(fake, victim, verifier, params, args.rounds, rng)
    _emit({
        "forgeries": forgeries,
        "forged_b1_accepted": passed,
        "session": {
            "accepted": session.accepted,
            "rounds_passed": session.rounds_passed,
            "rounds": session.rounds,
        },
    })
    return EXIT_OK


def cmd_bruteforce(args) -> int:
    params = load_params(args.params)
    victim = load_public_key(args.victim_pub, params)
    result = attack_recover_key(params, victim, args.cap, workers=args.workers)
    out = result.to_json()
    if args.verifier_key:
        verifier = load_private_key(args.verifier_key, params)
        out["sessions"] = check_recovered_keys(params, result, victim, verifier,
                                               derive_public(params, verifier), args.rounds, _rng(args))
    _emit(out)
    return EXIT_OK


def cmd_keyspace(args) -> int:
    report = keyspace_cardinality(args.prime, args.dim)
    log.info("🔢 %d (≈%d bits, produto a partir de p − 2); %d (≈%d bits, contagem derivada)",
             report.cardinality_published, round(report.bits_published),
             report.cardinality_derived, round(report.bits_derived))
    _emit(report.to_json())
    return EXIT_OK


def cmd_bench(args) -> int:
    results = run_bench(args.dims, p=args.prime, repeat=args.repeat, rng=_rng(args))
    _emit(bench_to_json(results, args.prime))
    return EXIT_OK


def _peer_config(args, **extra) -> PeerConfig:
    host, port = parse_hostport(extra.pop("address"))
    return PeerConfig(
        params_path=args.params,
        key_path=args.key,
        host=host,
        port=port,
        rounds=args.rounds,
        timeout_secs=args.timeout_secs,
        seed=args.seed,
        **extra,
    )


def cmd_prove(args) -> int:
    cfg = _peer_config(args, address=args.connect, peer_pub_path=args.peer_pub,
                       transcript_path=args.transcript, connect_retries=args.retries)
    outcome = run_prover(cfg)
    _emit(outcome.to_json())
    return EXIT_OK if outcome.accepted else EXIT_REJECT


def cmd_verify_server(args) -> int:
    cfg = _peer_config(args, address=args.listen, registry_dir=args.registry,
                       transcript_dir=args.transcript_dir)
    serve_verifier(cfg)
    return EXIT_OK


def cmd_config(args) -> int:
    config.assert_config()
    config.debug_print(args.show_values)
    return EXIT_OK


# =============================================================================
# Parser
# =============================================================================
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m src.main",
                                     description="Identificação zero-knowledge sobre GL(d, F_p)")
    parser.add_argument("--verbose", "-v", action="store_true", help="Log de debug")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, fn, help_: str, *, seed: bool = True) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        if seed:
            sp.add_argument("--seed", type=int, default=None, help="Semente (inseguro; testes/demos)")
        return sp

    sp = add("params", cmd_params, "Gera parâmetros públicos (P, G, m, n)")
    sp.add_argument("--prime", type=int, default=config.DEFAULT_PRIME)
    sp.add_argument("--dim", type=int, default=config.DEFAULT_DIM)
    sp.add_argument("--bound", type=int, default=config.DEFAULT_EXPONENT_BOUND)
    sp.add_argument("--strict", dest="strict", action="store_true", default=True,
                    help="Exige char_poly irredutível para P e G (padrão)")
    sp.add_argument("--no-strict", dest="strict", action="store_false")
    sp.add_argument("--factorization", default=None,
                    help="Fatoração de p^d − 1 ('q:e,q:e'); exige char_poly primitivo")
    sp.add_argument("--out", default=None)

    sp = add("keygen", cmd_keygen, "Gera par de chaves")
    sp.add_argument("--params", required=True)
    sp.add_argument("--id", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--pub-out", default=None)

    sp = add("pubkey", cmd_pubkey, "Deriva a chave pública de uma chave privada", seed=False)
    sp.add_argument("--params", required=True)
    sp.add_argument("--key", required=True)
    sp.add_argument("--out", default=None)

    sp = add("session-local", cmd_session_local, "Sessão completa em memória")
    sp.add_argument("--params", required=True)
    sp.add_argument("--prover-key", required=True)
    sp.add_argument("--verifier-key", required=True)
    sp.add_argument("--rounds", type=int, default=config.DEFAULT_ROUNDS)
    sp.add_argument("--transcript", default=None)

    sp = add("simulate", cmd_simulate, "Transcript simulado sem a chave do provador")
    sp.add_argument("--params", required=True)
    sp.add_argument("--prover-pub", required=True)
    sp.add_argument("--verifier-key", required=True)
    sp.add_argument("--rounds", type=int, default=config.DEFAULT_ROUNDS)
    sp.add_argument("--out", default=None)

    sp = add("attack", cmd_attack, "Falsificações de Mallory contra um verificador honesto")
    sp.add_argument("--params", required=True)
    sp.add_argument("--victim-pub", required=True)
    sp.add_argument("--verifier-key", required=True)
    sp.add_argument("--fake-key", default=None, help="Chave falsa; sorteada se omitida")
    sp.add_argument("--rounds", type=int, default=config.DEFAULT_ROUNDS)

    sp = add("bruteforce", cmd_bruteforce, "Oráculo GSDP por força bruta (parâmetros de brinquedo)")
    sp.add_argument("--params", required=True)
    sp.add_argument("--victim-pub", required=True)
    sp.add_argument("--cap", type=int, default=config.ENUMERATION_CAP)
    sp.add_argument("--workers", type=int, default=config.ORACLE_WORKERS)
    sp.add_argument("--verifier-key", default=None, help="Confere cada chave recuperada com uma sessão")
    sp.add_argument("--rounds", type=int, default=config.DEFAULT_ROUNDS)

    sp = add("keyspace", cmd_keyspace, "Cardinalidade do espaço de chaves", seed=False)
    sp.add_argument("--prime", type=int, default=config.DEFAULT_PRIME)
    sp.add_argument("--dim", type=int, default=config.DEFAULT_DIM)

    sp = add("bench", cmd_bench, "Micro-benchmark de mat_mul / mat_pow")
    sp.add_argument("--prime", type=int, default=config.DEFAULT_PRIME)
    sp.add_argument("--dims", type=int, nargs="+", default=list(DEFAULT_DIMS))
    sp.add_argument("--repeat", type=int, default=5)

    for name, fn, help_ in (("prove", cmd_prove, "Provador em rede (Alice)"),
                            ("verify-server", cmd_verify_server, "Servidor verificador (Bob)")):
        sp = add(name, fn, help_)
        sp.add_argument("--params", required=True)
        sp.add_argument("--key", required=True)
        sp.add_argument("--rounds", type=int, default=config.DEFAULT_ROUNDS)
        sp.add_argument("--timeout-secs", type=float, default=config.TIMEOUT_SECS)
        if name == "prove":
            sp.add_argument("--connect", required=True, metavar="HOST:PORT")
            sp.add_argument("--peer-pub", required=True)
            sp.add_argument("--transcript", default=None)
            sp.add_argument("--retries", type=int, default=config.CONNECT_RETRIES)
        else:
            sp.add_argument("--listen", required=True, metavar="HOST:PORT")
            sp.add_argument("--registry", required=True)
            sp.add_argument("--transcript-dir", default=config.TRANSCRIPT_DIR)

    sp = add("config", cmd_config, "Mostra a configuração efetiva", seed=False)
    sp.add_argument("--show-values", action="store_true")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=getattr(logging, str(config.LOG_LEVEL).upper(), logging.INFO),
        format="%(asctime)s | %(levelname)s | %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except ZkpError as e:
        log.error("❌ %s: %s", type(e).__name__, e)
        return e.exit_code
    except OSError as e:
        log.error("❌ Erro de E/S: %s", e)
        return EXIT_IO
    except ValueError as e:
        log.error("❌ Uso inválido: %s", e)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
