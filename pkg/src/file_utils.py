# src/file_utils.py
from __future__ import annotations

import json
import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from .errors import ArtifactIOError

log = logging.getLogger(__name__)


# ----------------------------
# utilidades internas
# ----------------------------
def _ensure_parent(path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)


def _default_mode() -> int:
    # mkstemp cria 0600; arquivos públicos seguem o umask, como um open() comum
    umask = os.umask(0)
    os.umask(umask)
    return 0o666 & ~umask


def _apply_mode(path: str | Path, mode: int) -> None:
    try:
        os.chmod(path, mode)
    except (NotImplementedError, OSError) as e:
        # Windows e alguns FS montados não suportam chmod
        log.warning("⚠️ Não foi possível ajustar permissões de %s: %s", path, e)


def _write_atomic_text(path: str | Path, text: str, *, mode: Optional[int] = None) -> str:
    path = str(path)
    _ensure_parent(path)
    fd, tmp = tempfile.mkstemp(prefix=os.path.basename(path) + "_", suffix=".tmp",
                               dir=os.path.dirname(os.path.abspath(path)))
    os.close(fd)
    _apply_mode(tmp, _default_mode() if mode is None else mode)
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    shutil.move(tmp, path)
    return path


# ----------------------------
# JSON / JSON Lines
# ----------------------------
def write_json_atomic(path: str | Path, payload: Dict[str, Any], *, mode: Optional[int] = None) -> str:
    """Grava JSON via arquivo temporário + move (nunca deixa arquivo pela metade)."""
    return _write_atomic_text(path, json.dumps(payload, ensure_ascii=False, indent=2) + "\n", mode=mode)


def read_json(path: str | Path) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ArtifactIOError(f"não foi possível ler {path}: {e}")
    except json.JSONDecodeError as e:
        raise ArtifactIOError(f"JSON inválido em {path}: {e}")
    if not isinstance(data, dict):
        raise ArtifactIOError(f"{path}: esperado um objeto JSON")
    return data


def write_jsonl_atomic(path: str | Path, rows: Iterable[Dict[str, Any]]) -> str:
    text = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows)
    return _write_atomic_text(path, text)


def read_jsonl(path: str | Path) -> List[Dict[str, Any]]:
    rows: List[Dict[str, Any]] = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError as e:
                    raise ArtifactIOError(f"{path}:{lineno}: JSON inválido: {e}")
    except OSError as e:
        raise ArtifactIOError(f"não foi possível ler {path}: {e}")
    return rows


# ----------------------------
# retenção de arquivos (transcripts antigos)
# ----------------------------
def _list_sorted(files: Iterable[Path]) -> list[Path]:
    # Ordena por mtime desc (mais recente primeiro)
    return sorted([f for f in files if f.is_file()],
                  key=lambda p: p.stat().st_mtime,
                  reverse=True)


def prune_files(directory: str | Path, pattern: str, keep_last: int) -> int:
    """Mantém só os `keep_last` arquivos mais novos que batem no padrão. Retorna quantos removeu."""
    directory = Path(directory)
    if not directory.exists():
        log.info("ℹ️ Pasta %s não existe, nada a fazer.", directory)
        return 0

    paths = _list_sorted(directory.glob(pattern))
    trash = paths[max(keep_last, 0):]
    removed = 0
    for p in trash:
        try:
            os.remove(p)
            removed += 1
        except OSError as e:
            log.error("⚠️ erro ao remover %s: %s", p.name, e)
    if removed:
        log.info("🧹 %s/%s: removidos %d arquivo(s), mantendo %d", directory, pattern, removed, keep_last)
    return removed
