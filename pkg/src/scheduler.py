# src/scheduler.py
from __future__ import annotations

import logging
import os
from datetime import datetime
from logging.handlers import RotatingFileHandler
from typing import Any, Optional

import pytz
from apscheduler.schedulers.background import BackgroundScheduler

from . import config
from .file_utils import prune_files

log = logging.getLogger(__name__)

LOG_FMT = "%(asctime)s | %(levelname)s | %(message)s"
TRANSCRIPT_PATTERN = "*.jsonl"


# =============================================================================
# LOGGING (console + arquivo em data/logs/verifier_YYYYMMDD.log)
# =============================================================================
def setup_logging(log_dir: Optional[str] = None, name: str = "verifier") -> logging.Logger:
    log_dir = log_dir or config.LOG_DIR
    os.makedirs(log_dir, exist_ok=True)
    date_tag = datetime.now().strftime("%Y%m%d")
    log_file = os.path.join(log_dir, f"{name}_{date_tag}.log")

    # logger do pacote: todos os módulos src.* herdam o handler
    logger = logging.getLogger("src")

    # Evita handlers duplicados em re-chamadas
    if any(isinstance(h, RotatingFileHandler) and h.baseFilename == os.path.abspath(log_file)
           for h in logger.handlers):
        return logger

    # Arquivo (rotating por tamanho para evitar arquivos gigantes; 5 MB x 5 backups)
    fh = RotatingFileHandler(log_file, maxBytes=5 * 1024 * 1024, backupCount=5, encoding="utf-8")
    fh.setLevel(logging.INFO)
    fh.setFormatter(logging.Formatter(LOG_FMT))
    logger.addHandler(fh)
    log.info("🗒️ Log em arquivo: %s", log_file)
    return logger


def local_now(tz_name: Optional[str] = None) -> datetime:
    return datetime.now(pytz.timezone(tz_name or config.SCHEDULER_TIMEZONE))


def timestamp_tag(tz_name: Optional[str] = None) -> str:
    return local_now(tz_name).strftime("%Y%m%dT%H%M%S%f")


# =============================================================================
# JOBS DE MANUTENÇÃO DO VERIFICADOR
# =============================================================================
def job_reload_registry(server: Any) -> int:
    """`server` precisa expor reload_registry() -> int."""
    try:
        count = server.reload_registry()
        log.info("🔄 Registry recarregado: %d chave(s)", count)
        return count
    except Exception as e:
        log.exception("⚠️ Falha ao recarregar o registry: %s", e)
        return -1


def job_prune_transcripts(transcript_dir: str, keep_last: int) -> int:
    try:
        return prune_files(transcript_dir, TRANSCRIPT_PATTERN, keep_last)
    except Exception as e:
        log.exception("⚠️ Falha na limpeza de transcripts: %s", e)
        return 0


def start_maintenance(
    server: Any,
    *,
    transcript_dir: Optional[str] = None,
    reload_minutes: Optional[int] = None,
    keep_last: Optional[int] = None,
    tz_name: Optional[str] = None,
) -> BackgroundScheduler:
    transcript_dir = transcript_dir or config.TRANSCRIPT_DIR
    reload_minutes = config.REGISTRY_RELOAD_MINUTES if reload_minutes is None else reload_minutes
    keep_last = config.TRANSCRIPT_KEEP_LAST if keep_last is None else keep_last

    scheduler = BackgroundScheduler(timezone=pytz.timezone(tz_name or config.SCHEDULER_TIMEZONE))
    scheduler.add_job(job_reload_registry, "interval", args=[server], minutes=reload_minutes,
                      id="reload_registry", coalesce=True, max_instances=1)
    scheduler.add_job(job_prune_transcripts, "interval", args=[transcript_dir, keep_last],
                      minutes=reload_minutes, id="prune_transcripts", coalesce=True, max_instances=1)
    scheduler.start()
    log.info("🕒 Manutenção agendada a cada %d min (keep_last=%d, tz=%s)",
             reload_minutes, keep_last, scheduler.timezone)
    return scheduler
