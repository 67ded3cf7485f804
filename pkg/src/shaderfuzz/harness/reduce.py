"""Greedy chain reduction of anomaly recipes."""

from __future__ import annotations

from typing import Callable, Optional

from ..metamorph import (NoDonatableRegion, NotApplicable, RecipeMismatch, VariantRecipe,
                         replay_recipe)
from ..shader_lang.errors import ShaderTypeError
from .classify import AnomalyKind


class NonReproducible(Exception):
    pass


def _try(reference, corpus, recipe, check, memo) -> Optional[AnomalyKind]:
    try:
        variant = replay_recipe(reference, corpus, recipe)
    except (NotApplicable, NoDonatableRegion, ShaderTypeError):
        return None  # a dropped step created something a later step needed
    key = variant.text
    if key not in memo:
        memo[key] = check(variant)
    return memo[key]


def minimize(reference, corpus, recipe: VariantRecipe, kind: AnomalyKind,
             check: Callable) -> VariantRecipe:
    """Drop steps while ``check(variant)`` still reports ``kind``.

    Single steps are tried first: a lone reproducing step is already 1-minimal.
    Otherwise steps are removed one at a time, restarting after each success,
    until no single removal keeps the anomaly.
    """
    kind = AnomalyKind(kind)
    memo: dict = {}
    if _try(reference, corpus, recipe, check, memo) != kind:
        raise NonReproducible(f"{recipe.reference} seed {recipe.seed} does not reproduce {kind.value}")
    chain = list(recipe.chain)
    if len(chain) == 1:
        return recipe
    for step in chain:
        cand = recipe.with_chain([step])
        if _try(reference, corpus, cand, check, memo) == kind:
            return cand
    changed = True
    while changed and len(chain) > 1:
        changed = False
        for k in range(len(chain) - 1, -1, -1):
            cand_chain = chain[:k] + chain[k + 1:]
            cand = recipe.with_chain(cand_chain)
            if _try(reference, corpus, cand, check, memo) == kind:
                chain = cand_chain
                changed = True
                break
    return recipe.with_chain(chain)


__all__ = ["NonReproducible", "minimize", "RecipeMismatch"]
