"""Montagem de prompts de texto por categoria."""

from typing import List, Sequence

from app.services.encoders.interfaces import PromptTemplateError

CLASS_TOKEN = "[CLASS]"
DEFAULT_TEMPLATE = "image of a [CLASS]."

PROMPT_SWEEP_TEMPLATES = (
    "image of a [CLASS].",
    "gray image of a [CLASS].",
    "photo of a [CLASS].",
    "reconstructed image of a [CLASS].",
    "clean image of a [CLASS].",
)


def build_prompts(categories: Sequence[str], template: str = DEFAULT_TEMPLATE) -> List[str]:
    """
    Substitui o marcador [CLASS] pelo nome de cada categoria, na ordem dada.

    Raises:
        PromptTemplateError: Template sem exatamente um [CLASS] ou lista de categorias vazia
    """
    if template.count(CLASS_TOKEN) != 1:
        raise PromptTemplateError(f"Template precisa de exatamente um marcador {CLASS_TOKEN}: '{template}'")
    if not categories:
        raise PromptTemplateError("Lista de categorias vazia")
    return [template.replace(CLASS_TOKEN, name) for name in categories]
