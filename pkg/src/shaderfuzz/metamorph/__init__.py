"""Semantic-preserving variant generation."""

from .generate import (MAX_ATTEMPTS, VariantShader, default_env, donate_code, generate_variant,
                       mutate_control_flow, mutate_statement, replay_recipe)
from .recipe import (GenerationExhausted, NoDonatableRegion, NotApplicable, RecipeMismatch, Step,
                     TransformKind, VariantRecipe, content_hash)
from .transforms import TRANSFORMS, DonorContext, find_regions

__all__ = [
    "MAX_ATTEMPTS", "VariantShader", "default_env", "donate_code", "generate_variant",
    "mutate_control_flow", "mutate_statement", "replay_recipe", "GenerationExhausted",
    "NoDonatableRegion", "NotApplicable", "RecipeMismatch", "Step", "TransformKind",
    "VariantRecipe", "content_hash", "TRANSFORMS", "DonorContext", "find_regions",
]
