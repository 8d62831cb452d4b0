import itertools

import pytest

from src.errors import ConfigError, FingerprintMismatch, ProtocolViolation, SingularResponse, SingularWitness
from src.field_core import validate_modulus
from src.keys import PrivateKey, derive_public
from src.matrix_core import (
    DiagonalSpec,
    Matrix,
    conjugate,
    mat_det,
    mat_mul,
    mat_pow,
    sample_distinct_diagonal,
    sample_invertible,
)
from src.protocol import (
    ProverSession,
    RoundRecord,
    SessionConfig,
    VerifierSession,
    challenge_create,
    cheating_session,
    mallory_forge,
    read_transcript,
    record_satisfies,
    response_create,
    round_verify,
    session_run,
    session_target,
    simulate_transcript,
    witness_create,
    write_transcript,
)
from src.randomness import RandomSource


# ---------------------------------------------------------------------
# rodada de brinquedo (p=7, d=2, P=G=I, m=n=1)
# ---------------------------------------------------------------------
def test_toy_round_b1(toy_params, alice, bob, mod7, rng):
    state, S = witness_create(alice[0], bob[1], toy_params, rng, k=1)
    assert S == Matrix.diag(mod7, [2, 4])
    v = challenge_create(bob[0], S, alice[1], toy_params, rng, force_b=1)
    assert v.Q == Matrix.diag(mod7, [2, 4])
    R = response_create(state, 1, v.Q, toy_params)
    assert R == Matrix.diag(mod7, [4, 2])
    assert round_verify(v, R, bob[0], toy_params)
    assert v.target == Matrix.diag(mod7, [2, 4])


def test_toy_round_b0_with_forced_mask(toy_params, alice, bob, mod7, rng):
    state, S = witness_create(alice[0], bob[1], toy_params, rng, k=1)
    h = Matrix(mod7, [[1, 1], [0, 1]])
    v = challenge_create(bob[0], S, alice[1], toy_params, rng, force_b=0, h=h, audit=True)
    assert v.Q == Matrix(mod7, [[2, 1], [0, 4]])
    assert v.h_mask == h
    R = response_create(state, 0, v.Q, toy_params)
    assert round_verify(v, R, bob[0], toy_params)


def test_witness_k_range(toy_params, alice, bob, rng):
    with pytest.raises(ConfigError):
        witness_create(alice[0], bob[1], toy_params, rng, k=0)


def test_singular_inputs(toy_params, alice, bob, mod7, rng):
    zero = Matrix(mod7, [[0, 0], [0, 0]])
    with pytest.raises(SingularWitness):
        challenge_create(bob[0], zero, alice[1], toy_params, rng)
    _, S = witness_create(alice[0], bob[1], toy_params, rng, k=1)
    v = challenge_create(bob[0], S, alice[1], toy_params, rng, force_b=1)
    with pytest.raises(SingularResponse):
        round_verify(v, zero, bob[0], toy_params)


def test_fingerprint_enforced(toy_params, big_params, alice, big_bob, rng):
    with pytest.raises(FingerprintMismatch):
        witness_create(alice[0], big_bob[1], toy_params, rng)


# ---------------------------------------------------------------------
# sessões
# ---------------------------------------------------------------------
def test_honest_toy_session(toy_params, alice, bob, rng):
    verdict = session_run(alice[0], alice[1], bob[0], bob[1], toy_params, SessionConfig(rounds=20), rng)
    assert verdict.accepted
    assert verdict.rounds_passed == 20
    assert [r.round_index for r in verdict.records] == list(range(20))


def test_self_authentication(toy_params, alice, rng):
    verdict = session_run(alice[0], alice[1], alice[0], alice[1], toy_params, SessionConfig(rounds=10), rng)
    assert verdict.accepted


def test_honest_big_session(big_params, big_alice, big_bob):
    verdict = session_run(*big_alice, *big_bob, big_params, SessionConfig(rounds=20), RandomSource(3))
    assert verdict.accepted
    assert all(record_satisfies(r, big_bob[0], big_params) for r in verdict.records)


def test_session_config_validation():
    with pytest.raises(ConfigError):
        SessionConfig(rounds=0)


def test_session_state_machine_order(toy_params, alice, bob, mod7, rng):
    prover = ProverSession(alice[0], bob[1], toy_params, rng)
    with pytest.raises(ProtocolViolation):
        prover.respond(0, Matrix.identity(mod7, 2))
    S = prover.witness()
    with pytest.raises(ProtocolViolation):
        prover.witness()

    verifier = VerifierSession(bob[0], alice[1], toy_params, SessionConfig(rounds=1), rng)
    with pytest.raises(ProtocolViolation):
        verifier.verify(Matrix.identity(mod7, 2))
    b, Q = verifier.challenge(S)
    with pytest.raises(ProtocolViolation):
        verifier.challenge(S)
    record = verifier.verify(prover.respond(b, Q))
    assert record.verdict
    assert verifier.finished
    with pytest.raises(ProtocolViolation):
        verifier.challenge(S)


def test_singular_witness_fails_round(toy_params, alice, bob, mod7, rng):
    zero = Matrix(mod7, [[0, 0], [0, 0]])
    verdict = session_run(alice[0], alice[1], bob[0], bob[1], toy_params, SessionConfig(rounds=3), rng,
                          forged_witness=zero)
    assert not verdict.accepted
    assert verdict.rounds_passed == 0
    assert all(r.b == 0 for r in verdict.records)


def test_any_invertible_witness_passes_b0(toy_params, alice, bob, mod7, rng):
    forged = Matrix(mod7, [[1, 1], [0, 1]])
    verdict = session_run(alice[0], alice[1], bob[0], bob[1], toy_params, SessionConfig(rounds=1), rng,
                          force_b=0, forged_witness=forged)
    assert verdict.accepted
    assert verdict.records[0].S == forged


def test_sessions_use_fresh_randomness(big_params, big_alice, big_bob):
    first = session_run(*big_alice, *big_bob, big_params, SessionConfig(rounds=10), RandomSource(1))
    second = session_run(*big_alice, *big_bob, big_params, SessionConfig(rounds=10), RandomSource(2))
    assert first.accepted and second.accepted
    assert [r.S for r in first.records] != [r.S for r in second.records]
    assert [r.Q for r in first.records] != [r.Q for r in second.records]


def test_singular_response_fails_round(toy_params, alice, bob, mod7, rng):
    prover = ProverSession(alice[0], bob[1], toy_params, rng)
    verifier = VerifierSession(bob[0], alice[1], toy_params, SessionConfig(rounds=1), rng)
    verifier.challenge(prover.witness())
    record = verifier.verify(Matrix(mod7, [[1, 2], [2, 4]]))
    assert not record.verdict
    assert not verifier.verdict().accepted


# ---------------------------------------------------------------------
# Mallory
# ---------------------------------------------------------------------
def test_toy_forgery_rejected(toy_params, alice, bob, mod7, rng):
    fake = PrivateKey.from_lambdas(toy_params, "alice", (3, 2))
    out = mallory_forge(fake, alice[1], bob[0], toy_params, rng)
    assert not out.accepted
    assert out.residual == Matrix.diag(mod7, [4, 2])
    assert out.target == Matrix.diag(mod7, [2, 4])


def test_toy_equivalent_key_collision(toy_params, alice, bob, rng):
    # 5² ≡ 2² e 3² ≡ 3² (mod 7): mesma chave pública, mesma autenticação
    twin = PrivateKey.from_lambdas(toy_params, "alice", (5, 3))
    assert derive_public(toy_params, twin).g_x == alice[1].g_x
    assert mallory_forge(twin, alice[1], bob[0], toy_params, rng).accepted
    verdict = session_run(twin, alice[1], bob[0], bob[1], toy_params, SessionConfig(rounds=20), rng)
    assert verdict.accepted


def test_cheating_session_pattern(big_params, big_alice, big_bob):
    rng = RandomSource(8)
    fake = PrivateKey.from_lambdas(big_params, "alice", sample_distinct_diagonal(big_params.mod, 8, rng))
    verdict = cheating_session(fake, big_alice[1], big_bob[0], big_params, 40, rng)
    assert not verdict.accepted
    for r in verdict.records:
        assert r.verdict == (r.b == 0)
    assert verdict.rounds_passed == sum(1 for r in verdict.records if r.b == 0)


def test_cheating_session_guesses_each_round(toy_params, alice, bob):
    # com a chave gêmea, b = 1 só passa quando a aposta foi b = 1 (witness de A*)
    twin = PrivateKey.from_lambdas(toy_params, "alice", (5, 3))
    verdict = cheating_session(twin, alice[1], bob[0], toy_params, 200, RandomSource(17))
    assert all(r.verdict for r in verdict.records if r.b == 0)
    b1 = [r for r in verdict.records if r.b == 1]
    assert 0 < sum(r.verdict for r in b1) < len(b1)
    assert not verdict.accepted


@pytest.mark.slow
def test_residual_never_matches_for_random_fakes(big_params, big_alice, big_bob):
    rng = RandomSource(21)
    for _ in range(100):
        fake = PrivateKey.from_lambdas(big_params, "alice", sample_distinct_diagonal(big_params.mod, 8, rng))
        out = mallory_forge(fake, big_alice[1], big_bob[0], big_params, rng)
        assert out.residual != out.target
        assert not out.accepted


@pytest.mark.slow
def test_soundness_statistics(big_params, big_alice, big_bob):
    rng = RandomSource(2000)
    fake = PrivateKey.from_lambdas(big_params, "alice", sample_distinct_diagonal(big_params.mod, 8, rng))
    verdict = cheating_session(fake, big_alice[1], big_bob[0], big_params, 2000, rng)
    frac = verdict.rounds_passed / 2000
    assert 0.46 <= frac <= 0.54
    assert all(r.verdict for r in verdict.records if r.b == 0)
    assert not any(r.verdict for r in verdict.records if r.b == 1)


@pytest.mark.slow
def test_forged_sessions_all_rejected(big_params, big_alice, big_bob):
    rng = RandomSource(200)
    for _ in range(200):
        fake = PrivateKey.from_lambdas(big_params, "alice", sample_distinct_diagonal(big_params.mod, 8, rng))
        assert not cheating_session(fake, big_alice[1], big_bob[0], big_params, 20, rng).accepted


@pytest.mark.slow
def test_completeness_1000_rounds(big_params, big_alice, big_bob):
    verdict = session_run(*big_alice, *big_bob, big_params, SessionConfig(rounds=1000), RandomSource(1000))
    assert verdict.accepted
    assert verdict.rounds_passed == 1000


# ---------------------------------------------------------------------
# identidade de validação passo a passo
# ---------------------------------------------------------------------
def _substitution_chain(params, a, b, k, rng):
    g_a = derive_public(params, a).g_x
    g_b = derive_public(params, b).g_x
    m, n = params.m, params.n
    S = mat_mul(mat_mul(a.power(k), g_b), a.power(-m))
    # b = 1
    Q = mat_mul(mat_mul(mat_mul(b.power(m), S), g_a), b.power(n))
    R = mat_mul(mat_mul(a.power(-k), Q), a.power(-n))
    assert R == mat_mul(mat_mul(b.power(m), mat_mul(g_b, params.G)), b.power(n))
    assert mat_mul(mat_mul(b.power(-m), R), b.power(-n)) == mat_mul(g_b, params.G)
    # b = 0
    H = sample_invertible(params.mod, params.d, rng)
    Q0 = mat_mul(mat_mul(b.power(m), H), b.power(n))
    R0 = mat_mul(mat_mul(mat_pow(S, -m), Q0), mat_pow(S, -n))
    assert mat_mul(mat_mul(mat_pow(S, m), R0), mat_pow(S, n)) == Q0


def test_validation_identity_chain(big_params):
    rng = RandomSource(10)
    for _ in range(10):
        a = PrivateKey.from_lambdas(big_params, "a", sample_distinct_diagonal(big_params.mod, 8, rng))
        b = PrivateKey.from_lambdas(big_params, "b", sample_distinct_diagonal(big_params.mod, 8, rng))
        _substitution_chain(big_params, a, b, rng.randint(1, big_params.exponent_bound), rng)


@pytest.mark.slow
def test_validation_identity_chain_fresh_params():
    from src.keys import gen_keypair, gen_params

    rng = RandomSource(100)
    for _ in range(100):
        params = gen_params(251, 8, 65536, strict_order=False, rng=rng)
        a, _ = gen_keypair(params, "a", rng)
        b, _ = gen_keypair(params, "b", rng)
        _substitution_chain(params, a, b, rng.randint(1, params.exponent_bound), rng)


# ---------------------------------------------------------------------
# simulador
# ---------------------------------------------------------------------
def test_simulated_records_satisfy(big_params, big_alice, big_bob):
    records = simulate_transcript(big_params, big_alice[1], big_bob[0], big_bob[1], 50, RandomSource(4))
    assert len(records) == 50
    assert all(r.verdict for r in records)
    assert all(record_satisfies(r, big_bob[0], big_params) for r in records)


@pytest.mark.slow
def test_simulated_bit_frequency(big_params, big_alice, big_bob):
    records = simulate_transcript(big_params, big_alice[1], big_bob[0], big_bob[1], 1000, RandomSource(5))
    assert all(record_satisfies(r, big_bob[0], big_params) for r in records)
    assert 0.46 <= sum(r.b for r in records) / 1000 <= 0.54


def test_simulator_rejects_zero_rounds(toy_params, alice, bob, rng):
    with pytest.raises(ConfigError):
        simulate_transcript(toy_params, alice[1], bob[0], bob[1], 0, rng)


def test_mask_bijection_gl_2_3():
    # {B^m · H · B^n : H ∈ GL(2, F_3)} = GL(2, F_3)
    mod3 = validate_modulus(3)
    gl = {m for m in (Matrix.from_flat(mod3, 2, v) for v in itertools.product(range(3), repeat=4))
          if mat_det(m).value != 0}
    assert len(gl) == 48
    P = Matrix(mod3, [[1, 1], [0, 1]])
    B = conjugate(P, DiagonalSpec((1, 2), mod3))
    for m, n in ((1, 1), (2, 3), (5, 1)):
        Bm, Bn = mat_pow(B, m), mat_pow(B, n)
        assert {mat_mul(mat_mul(Bm, h), Bn) for h in gl} == gl


def test_tampered_record_fails(toy_params, alice, bob, mod7, rng):
    verdict = session_run(alice[0], alice[1], bob[0], bob[1], toy_params, SessionConfig(rounds=4), rng)
    r = verdict.records[0]
    bad = RoundRecord(r.round_index, r.S, r.Q, r.b, mat_mul(r.R, Matrix.diag(mod7, [1, 2])), r.verdict)
    target = session_target(toy_params, bob[0])
    assert record_satisfies(r, bob[0], toy_params, target)
    assert not record_satisfies(bad, bob[0], toy_params, target)


# ---------------------------------------------------------------------
# transcript
# ---------------------------------------------------------------------
def test_transcript_file(tmp_path, big_params, big_alice, big_bob):
    verdict = session_run(*big_alice, *big_bob, big_params, SessionConfig(rounds=5), RandomSource(6))
    path = tmp_path / "t" / "session.jsonl"
    write_transcript(path, verdict.records)
    lines = path.read_text().splitlines()
    assert len(lines) == 5
    assert '"round": 0' in lines[0]
    assert read_transcript(path, big_params) == verdict.records
    assert verdict.to_json()["records"][0]["S"] == verdict.records[0].to_json()["S"]
