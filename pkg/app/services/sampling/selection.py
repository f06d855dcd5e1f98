"""
Amostragem confiável de dados.

PPI escolhe os K exemplos de maior probabilidade posterior; TRCI mantém os
exemplos cuja predição não muda com a inversão temporal dos eventos; RDS é a
interseção dos dois conjuntos.
"""

from typing import Iterable, List, Sequence, Tuple

import numpy as np

from app.services.sampling.interfaces import LengthMismatchError, ProbabilityRangeError, SamplingConfigError
from app.services.sampling.models import ReliabilitySets

PROBABILITY_TOLERANCE = 1e-5


def _check_probabilities(values: np.ndarray) -> None:
    invalid = np.flatnonzero(~np.isfinite(values) | (values < -PROBABILITY_TOLERANCE) | (values > 1 + PROBABILITY_TOLERANCE))
    if invalid.size:
        index = int(invalid[0])
        raise ProbabilityRangeError(f"Probabilidade {values[index]} no índice {index} fora de [0, 1]")


def max_probabilities(probabilities: Sequence[Sequence[float]]) -> List[float]:
    """
    Máximo de cada linha de uma matriz B x C de probabilidades.

    Raises:
        ProbabilityRangeError: Valor fora de [0, 1] ou linha que não soma 1
    """
    rows = np.asarray(probabilities, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] == 0:
        raise ProbabilityRangeError(f"Esperada matriz B x C de probabilidades, recebido shape {rows.shape}")
    _check_probabilities(rows.ravel())
    sums = rows.sum(axis=1)
    off = np.flatnonzero(np.abs(sums - 1.0) > PROBABILITY_TOLERANCE * rows.shape[1])
    if off.size:
        index = int(off[0])
        raise ProbabilityRangeError(f"Linha {index} soma {sums[index]:.6f}, esperado 1")
    return rows.max(axis=1).tolist()


def ppi_select(max_probs: Sequence[float], k: int) -> Tuple[int, ...]:
    """
    Índices dos K maiores valores de p(c_i | I_i), em ordem decrescente.

    Empates ficam com o menor índice; se K > B devolve todos os B índices.

    Raises:
        SamplingConfigError: K < 1
        ProbabilityRangeError: Valor fora de [0, 1] ou não finito
    """
    if k < 1:
        raise SamplingConfigError(f"K deve ser >= 1, recebido {k}")
    values = np.asarray(max_probs, dtype=np.float64)
    _check_probabilities(values)
    # argsort estável sobre -p preserva a ordem dos índices em empates
    order = np.argsort(-values, kind="stable")
    return tuple(int(index) for index in order[:k])


def trci_select(preds: Sequence[int], reversed_preds: Sequence[int]) -> Tuple[int, ...]:
    """
    {i : preds[i] == reversed_preds[i]}, em ordem crescente.

    Raises:
        LengthMismatchError: Vetores de tamanhos diferentes
    """
    if len(preds) != len(reversed_preds):
        raise LengthMismatchError(f"Predições com tamanhos diferentes: {len(preds)} e {len(reversed_preds)}")
    return tuple(i for i, (a, b) in enumerate(zip(preds, reversed_preds)) if int(a) == int(b))


def rds_intersect(s_ppi: Iterable[int], s_trci: Iterable[int]) -> Tuple[int, ...]:
    return tuple(sorted(set(s_ppi) & set(s_trci)))


def reliable_sets(max_probs: Sequence[float], preds: Sequence[int], reversed_preds: Sequence[int], k: int, use_ppi: bool = True, use_trci: bool = True) -> ReliabilitySets:
    """
    Monta os três conjuntos para um lote.

    Com use_ppi=False o PPI seleciona o lote inteiro (K = B); com use_trci=False
    o TRCI aceita todos os índices. As duas variantes alimentam a ablação.
    """
    batch_size = len(max_probs)
    effective_k = k if use_ppi else batch_size
    s_ppi = ppi_select(max_probs, effective_k)
    s_trci = trci_select(preds, reversed_preds) if use_trci else tuple(range(batch_size))
    return ReliabilitySets(s_ppi=s_ppi, s_trci=s_trci, s_rds=rds_intersect(s_ppi, s_trci), k=effective_k, batch_size=batch_size)
