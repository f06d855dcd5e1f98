"""
Manifesto de dataset.

Arquivo delimitado com as colunas (relative_path, category_name, split), onde
split ∈ {train, test}. Os caminhos são relativos ao diretório do manifesto.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Union

import pandas as pd

from app.services.events.interfaces import ManifestError

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ["relative_path", "category_name", "split"]
VALID_SPLITS = ("train", "test")


@dataclass(frozen=True)
class ManifestEntry:
    """Uma linha do manifesto."""

    path: Path
    category_name: str
    split: str


@dataclass
class DatasetManifest:
    """Manifesto carregado, com caminhos resolvidos."""

    root: Path
    entries: List[ManifestEntry]

    @classmethod
    def load(cls, manifest_path: Union[str, Path], sep: Optional[str] = None) -> "DatasetManifest":
        """
        Carrega o manifesto com pandas.

        Args:
            manifest_path: Caminho do arquivo
            sep: Delimitador; None detecta automaticamente (vírgula, tab, ponto-e-vírgula)

        Raises:
            ManifestError: Arquivo ilegível, colunas ausentes ou split inválido
        """
        manifest_path = Path(manifest_path)
        try:
            frame = pd.read_csv(manifest_path, sep=sep, engine="python", dtype=str, comment="#")
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ManifestError(f"Não foi possível ler o manifesto {manifest_path}: {e}")

        missing = [column for column in MANIFEST_COLUMNS if column not in frame.columns]
        if missing:
            raise ManifestError(f"Manifesto {manifest_path} sem as colunas: {', '.join(missing)}")

        frame = frame[MANIFEST_COLUMNS].apply(lambda column: column.str.strip())
        invalid = frame[~frame["split"].isin(VALID_SPLITS)]
        if not invalid.empty:
            first = invalid.index[0]
            raise ManifestError(f"Linha {first + 2} do manifesto: split '{invalid.iloc[0]['split']}' inválido (use train ou test)")

        root = manifest_path.parent
        entries = [ManifestEntry(path=root / row.relative_path, category_name=row.category_name, split=row.split) for row in frame.itertuples(index=False)]
        logger.info(f"Manifesto {manifest_path}: {len(entries)} entradas, {frame['category_name'].nunique()} categorias")
        return cls(root=root, entries=entries)

    def split(self, name: str, categories: Optional[Iterable[str]] = None) -> List[ManifestEntry]:
        """Entradas de um split, opcionalmente restritas a um conjunto de categorias."""
        allowed = set(categories) if categories is not None else None
        return [e for e in self.entries if e.split == name and (allowed is None or e.category_name in allowed)]

    def categories(self, split: Optional[str] = None) -> List[str]:
        """Categorias presentes (ordem alfabética)."""
        return sorted({e.category_name for e in self.entries if split is None or e.split == split})


def write_manifest(manifest_path: Union[str, Path], rows: Iterable[tuple]) -> Path:
    """Escreve um manifesto CSV a partir de tuplas (relative_path, category_name, split)."""
    manifest_path = Path(manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(rows), columns=MANIFEST_COLUMNS).to_csv(manifest_path, index=False)
    return manifest_path


def read_category_list(path: Union[str, Path]) -> List[str]:
    """Lê um arquivo de categorias (uma por linha, '#' para comentários)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [line.strip() for line in lines if line.strip() and not line.strip().startswith("#")]
