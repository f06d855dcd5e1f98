"""Escrita de logs estruturados em JSON lines (métricas por passo, conjuntos de confiança)."""

import json
import math
from pathlib import Path
from typing import Any, Dict, Iterator, List, Union


def _clean(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {key: _clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(item) for item in value]
    return value


class JsonLinesWriter:
    """Anexa um objeto JSON por linha; usado como context manager."""

    def __init__(self, path: Union[str, Path], append: bool = False):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = self.path.open("a" if append else "w", encoding="utf-8")

    def write(self, record: Dict[str, Any]) -> None:
        self._handle.write(json.dumps(_clean(record), sort_keys=True) + "\n")
        self._handle.flush()

    def close(self) -> None:
        if not self._handle.closed:
            self._handle.close()

    def __enter__(self) -> "JsonLinesWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_json_lines(path: Union[str, Path]) -> List[Dict[str, Any]]:
    return list(iter_json_lines(path))


def iter_json_lines(path: Union[str, Path]) -> Iterator[Dict[str, Any]]:
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                yield json.loads(line)


def truncate_after_step(path: Union[str, Path], step: int) -> None:
    """Mantém apenas registros com step <= step (retomada de treino)."""
    path = Path(path)
    if not path.exists():
        return
    kept = [record for record in iter_json_lines(path) if record.get("step", 0) <= step]
    path.write_text("".join(json.dumps(record, sort_keys=True) + "\n" for record in kept), encoding="utf-8")
