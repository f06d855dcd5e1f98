"""Diretórios de execução e o manifest.json com os arquivos produzidos."""

import json
import os
import time
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union


def prepare_run_dir(run_dir: Union[str, Path]) -> Path:
    path = Path(run_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_run_manifest(run_dir: Union[str, Path], files: Iterable[Union[str, Path]], command: str, extra: Optional[Dict[str, Any]] = None) -> Path:
    """Grava run_dir/manifest.json com os caminhos relativos ao diretório, ordenados."""
    run_dir = Path(run_dir)
    relative = sorted({Path(os.path.relpath(Path(file).resolve(), run_dir.resolve())).as_posix() for file in files})
    payload = {"command": command, "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"), "files": relative, **(extra or {})}
    path = run_dir / "manifest.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str), encoding="utf-8")
    return path
