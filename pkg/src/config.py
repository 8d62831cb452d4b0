# src/config.py
from __future__ import annotations
from pathlib import Path
from dotenv import load_dotenv
import os
import logging

from .errors import ConfigError

# Raiz do projeto: .../gsdp_zkauth
ROOT_DIR = Path(__file__).resolve().parents[1]
DOTENV_PATH = ROOT_DIR / ".env"

# Carrega .env explicitamente (env do sistema continua tendo precedência, override=False)
load_dotenv(dotenv_path=str(DOTENV_PATH), override=False)


def _env_any(*keys: str, default: str | None = None):
    """Lê a primeira variável disponível entre várias chaves alternativas."""
    for k in keys:
        v = os.getenv(k)
        if v is not None and str(v).strip() != "":
            return v.strip()
    return default


def _env_int(*keys: str, default: int) -> int:
    raw = _env_any(*keys, default=str(default))
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"Variável {keys[0]} não é inteira: {raw!r}")


def _env_float(*keys: str, default: float) -> float:
    raw = _env_any(*keys, default=str(default))
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"Variável {keys[0]} não é numérica: {raw!r}")


# --- Parâmetros públicos padrão (p=251, d=8) ---
DEFAULT_PRIME = _env_int("ZKP_PRIME", default=251)
DEFAULT_DIM = _env_int("ZKP_DIM", default=8)
DEFAULT_EXPONENT_BOUND = _env_int("ZKP_EXPONENT_BOUND", default=65536)

# --- Sessões ---
DEFAULT_ROUNDS = _env_int("ZKP_ROUNDS", default=20)
TIMEOUT_SECS = _env_float("ZKP_TIMEOUT_SECS", default=10.0)
CONNECT_RETRIES = _env_int("ZKP_CONNECT_RETRIES", default=2)
BACKOFF_BASE = _env_float("ZKP_BACKOFF_BASE", default=1.5)

# --- Oráculo força-bruta ---
ENUMERATION_CAP = _env_int("ZKP_ENUMERATION_CAP", default=10_000_000)
ORACLE_WORKERS = _env_int("ZKP_ORACLE_WORKERS", default=1)

# --- Manutenção do servidor verificador ---
REGISTRY_RELOAD_MINUTES = _env_int("ZKP_REGISTRY_RELOAD_MINUTES", default=5)
TRANSCRIPT_KEEP_LAST = _env_int("ZKP_TRANSCRIPT_KEEP_LAST", default=200)
SCHEDULER_TIMEZONE = _env_any("ZKP_SCHEDULER_TIMEZONE", "TZ", default="America/Sao_Paulo")

# --- Logging ---
LOG_LEVEL = _env_any("LOG_LEVEL", default="INFO")

# --- Paths auxiliares ---
DATA_DIR = Path(_env_any("ZKP_DATA_DIR", default=str(ROOT_DIR / "data")))
TRANSCRIPT_DIR = str(DATA_DIR / "transcripts")
LOG_DIR = str(DATA_DIR / "logs")


def ensure_dirs(create: bool = True):
    """Garante que diretórios de trabalho existam."""
    for p in (TRANSCRIPT_DIR, LOG_DIR):
        path = Path(p)
        if create:
            path.mkdir(parents=True, exist_ok=True)


def assert_config():
    if DEFAULT_ROUNDS < 1:
        raise ConfigError(f"ZKP_ROUNDS deve ser >= 1 (recebido {DEFAULT_ROUNDS})")
    if DEFAULT_ROUNDS < 10:
        logging.warning("[config] ZKP_ROUNDS=%d: chance de fraude 2^-%d é alta demais para uso real.",
                        DEFAULT_ROUNDS, DEFAULT_ROUNDS)
    if DEFAULT_EXPONENT_BOUND < 1:
        raise ConfigError(f"ZKP_EXPONENT_BOUND deve ser >= 1 (recebido {DEFAULT_EXPONENT_BOUND})")
    if TIMEOUT_SECS <= 0:
        raise ConfigError(f"ZKP_TIMEOUT_SECS deve ser > 0 (recebido {TIMEOUT_SECS})")
    if ORACLE_WORKERS < 1:
        raise ConfigError(f"ZKP_ORACLE_WORKERS deve ser >= 1 (recebido {ORACLE_WORKERS})")
    if ENUMERATION_CAP < 1:
        raise ConfigError(f"ZKP_ENUMERATION_CAP deve ser >= 1 (recebido {ENUMERATION_CAP})")
    if CONNECT_RETRIES < 0:
        raise ConfigError(f"ZKP_CONNECT_RETRIES não pode ser negativo ({CONNECT_RETRIES})")

    # Logging
    os.environ.setdefault("LOG_LEVEL", LOG_LEVEL)


def debug_print(show_values: bool = False):
    print("ROOT_DIR      :", ROOT_DIR)
    print(".env path     :", DOTENV_PATH, "| exists:", DOTENV_PATH.exists())
    print("PRIME / DIM   :", DEFAULT_PRIME, "/", DEFAULT_DIM)
    print("EXP_BOUND     :", DEFAULT_EXPONENT_BOUND)
    print("ROUNDS        :", DEFAULT_ROUNDS)
    print("TIMEOUT_SECS  :", TIMEOUT_SECS)
    print("ENUM_CAP      :", ENUMERATION_CAP, "| workers:", ORACLE_WORKERS)
    if show_values:
        print("RETRIES/BACKOFF:", CONNECT_RETRIES, "/", BACKOFF_BASE)
        print("RELOAD_MIN    :", REGISTRY_RELOAD_MINUTES)
        print("KEEP_LAST     :", TRANSCRIPT_KEEP_LAST)
        print("TIMEZONE      :", SCHEDULER_TIMEZONE)
    print("TRANSCRIPTS   :", TRANSCRIPT_DIR)
    print("LOG_DIR       :", LOG_DIR)
