import json

import pytest

from src.main import main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.fixture
def workspace(tmp_path, capsys):
    """params (p=251, d=4) + chaves de alice e bob, tudo com seed."""
    params = tmp_path / "params.json"
    code, _ = _run(capsys, "params", "--prime", "251", "--dim", "4", "--bound", "1000",
                   "--seed", "5", "--out", str(params))
    assert code == 0
    for i, who in enumerate(("alice", "bob")):
        code, _ = _run(capsys, "keygen", "--params", str(params), "--id", who, "--seed", str(10 + i),
                       "--out", str(tmp_path / f"{who}.key"), "--pub-out", str(tmp_path / f"{who}.pub"))
        assert code == 0
    return tmp_path


def test_keyspace(capsys):
    code, data = _run(capsys, "keyspace", "--prime", "251", "--dim", "8")
    assert code == 0
    assert data["cardinality_published"] == 13190481178699144320
    assert data["approx_bits_published"] == 64
    code, data = _run(capsys, "keyspace", "--prime", "251", "--dim", "16")
    assert data["approx_bits_derived"] == 127


def test_params_seed_reproducible(capsys):
    _, a = _run(capsys, "params", "--prime", "251", "--dim", "4", "--bound", "1000", "--seed", "3")
    _, b = _run(capsys, "params", "--prime", "251", "--dim", "4", "--bound", "1000", "--seed", "3")
    assert a == b
    assert a["p"] == 251 and a["d"] == 4 and a["strict_order"] is True


def test_session_local(workspace, capsys):
    transcript = workspace / "t.jsonl"
    code, data = _run(capsys, "session-local", "--params", str(workspace / "params.json"),
                      "--prover-key", str(workspace / "alice.key"),
                      "--verifier-key", str(workspace / "bob.key"),
                      "--rounds", "12", "--seed", "1", "--transcript", str(transcript))
    assert code == 0
    assert data["accepted"] is True
    assert data["rounds_passed"] == data["rounds"] == 12
    assert len(transcript.read_text().splitlines()) == 12


def test_self_authentication(workspace, capsys):
    key = str(workspace / "alice.key")
    code, data = _run(capsys, "session-local", "--params", str(workspace / "params.json"),
                      "--prover-key", key, "--verifier-key", key, "--rounds", "8")
    assert code == 0
    assert data["accepted"] is True


def test_pubkey_matches_keygen(workspace, capsys):
    code, data = _run(capsys, "pubkey", "--params", str(workspace / "params.json"),
                      "--key", str(workspace / "alice.key"))
    assert code == 0
    assert data == json.loads((workspace / "alice.pub").read_text())


def test_simulate(workspace, capsys):
    out = workspace / "sim.jsonl"
    code, data = _run(capsys, "simulate", "--params", str(workspace / "params.json"),
                      "--prover-pub", str(workspace / "alice.pub"),
                      "--verifier-key", str(workspace / "bob.key"),
                      "--rounds", "30", "--seed", "2", "--out", str(out))
    assert code == 0
    assert data["rounds"] == 30
    assert data["all_satisfy"] is True
    assert 0.0 <= data["b1_fraction"] <= 1.0
    assert len(out.read_text().splitlines()) == 30


def test_attack_rejected(workspace, capsys):
    code, data = _run(capsys, "attack", "--params", str(workspace / "params.json"),
                      "--victim-pub", str(workspace / "alice.pub"),
                      "--verifier-key", str(workspace / "bob.key"),
                      "--rounds", "20", "--seed", "4")
    assert code == 0
    assert data["forged_b1_accepted"] == 0
    assert len(data["forgeries"]) == 20
    assert data["session"]["accepted"] is False


def test_bruteforce_recovers_key(tmp_path, capsys):
    params = str(tmp_path / "small.json")
    _run(capsys, "params", "--prime", "11", "--dim", "3", "--bound", "50", "--no-strict",
         "--seed", "2", "--out", params)
    for i, who in enumerate(("victim", "bob")):
        _run(capsys, "keygen", "--params", params, "--id", who, "--seed", str(20 + i),
             "--out", str(tmp_path / f"{who}.key"), "--pub-out", str(tmp_path / f"{who}.pub"))
    code, data = _run(capsys, "bruteforce", "--params", params, "--victim-pub", str(tmp_path / "victim.pub"),
                      "--verifier-key", str(tmp_path / "bob.key"), "--rounds", "8", "--seed", "3")
    assert code == 0
    assert data["candidates_tested"] == 720
    lambdas = json.loads((tmp_path / "victim.key").read_text())["lambdas"]
    assert lambdas in data["solutions"]
    assert all(s["accepted"] for s in data["sessions"])


def test_bruteforce_cap(tmp_path, capsys):
    params = str(tmp_path / "small.json")
    _run(capsys, "params", "--prime", "11", "--dim", "3", "--bound", "50", "--no-strict",
         "--seed", "2", "--out", params)
    _run(capsys, "keygen", "--params", params, "--id", "v", "--out", str(tmp_path / "v.key"),
         "--pub-out", str(tmp_path / "v.pub"))
    code, _ = _run(capsys, "bruteforce", "--params", params, "--victim-pub", str(tmp_path / "v.pub"),
                   "--cap", "100")
    assert code == 2


def test_bench(capsys):
    code, data = _run(capsys, "bench", "--dims", "2", "--repeat", "1", "--seed", "1")
    assert code == 0
    assert data["p"] == 251
    assert {r["op"] for r in data["results"]} == {"mat_mul", "mat_inv", "mat_pow"}
    assert len(data["results"]) == 8


def test_config(capsys):
    assert main(["config"]) == 0
    assert "ROUNDS" in capsys.readouterr().out


# ---------------------------------------------------------------------
# códigos de saída
# ---------------------------------------------------------------------
def test_missing_file_exit_code(tmp_path, capsys):
    code, _ = _run(capsys, "pubkey", "--params", str(tmp_path / "nope.json"), "--key", "x.key")
    assert code == 3


def test_not_prime_exit_code(capsys):
    code, _ = _run(capsys, "params", "--prime", "9", "--dim", "2")
    assert code == 2


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["keyspace", "--bogus"])
    assert exc.value.code == 2


def test_fingerprint_mismatch_exit_code(workspace, tmp_path, capsys):
    other = tmp_path / "other.json"
    _run(capsys, "params", "--prime", "251", "--dim", "4", "--bound", "1000", "--seed", "99",
         "--out", str(other))
    code, _ = _run(capsys, "session-local", "--params", str(other),
                   "--prover-key", str(workspace / "alice.key"),
                   "--verifier-key", str(workspace / "bob.key"))
    assert code == 4
