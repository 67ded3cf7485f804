"""Variant generation and recipe replay."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..rng import SplitMix64, derive
from ..runtime.env import ExecEnv, ExecResult
from ..shader_lang import ast as A
from ..shader_lang.checker import typecheck
from ..shader_lang.interp import interpret
from ..shader_lang.printer import pretty_print
from .astutil import STEP_ID_BASE, IdAlloc, index
from .recipe import (GenerationExhausted, NoDonatableRegion, NotApplicable, RecipeMismatch, Step,
                     TransformKind, VariantRecipe, content_hash)
from .transforms import TRANSFORMS, DonorContext

MAX_ATTEMPTS = 16
MAX_DEPTH = 32


@dataclass
class VariantShader:
    ast: A.Shader
    recipe: VariantRecipe
    reference_name: str
    oracle: Optional[ExecResult] = field(default=None, compare=False)
    _text: Optional[str] = field(default=None, compare=False, repr=False)

    @property
    def text(self) -> str:
        if self._text is None:
            self._text = pretty_print(self.ast)
        return self._text


class _Rejected(Exception):
    pass


def _context(corpus) -> DonorContext:
    if isinstance(corpus, DonorContext):
        return corpus
    if corpus is None:
        return DonorContext({})
    if isinstance(corpus, Mapping):
        return DonorContext(dict(corpus))
    return DonorContext({f"donor{k}": s for k, s in enumerate(corpus)})


def _apply_step(work: A.Shader, step: Step, ctx: DonorContext, node=None) -> None:
    t = TRANSFORMS[step.kind]
    if node is None:
        node = index(work).get(step.target)
        if node is None:
            raise NotApplicable(f"node {step.target} not present")
    t.apply(work, node, step.params, ctx, IdAlloc(step.uid))
    typecheck(work)


def _pick(work: A.Shader, rng: SplitMix64, ctx: DonorContext, uid: int) -> Step:
    pairs = [(kind, nid) for kind in TransformKind for nid in TRANSFORMS[kind].sites(work, ctx)]
    if not pairs:
        raise _Rejected("no applicable transform")
    kind, nid = pairs[rng.below(len(pairs))]
    node = index(work)[nid]
    params = TRANSFORMS[kind].choose(work, node, rng, ctx)
    step = Step(kind, nid, uid, params)
    _apply_step(work, step, ctx, node)
    return step


def default_env(seed: int, step_budget: int = 1_000_000) -> ExecEnv:
    return ExecEnv(input_seed=seed, sampler_seed=seed, step_budget=step_budget)


def generate_variant(reference: A.Shader, corpus=None, seed: int = 0, depth: int = 4, *,
                     reference_name: str = "reference", env: Optional[ExecEnv] = None,
                     observed=None, oracle: bool = True) -> VariantShader:
    """Chain ``depth`` transforms picked uniformly over applicable (kind, site) pairs.

    Attempts whose variant traps or exceeds the interpreter step budget while the
    reference runs fine are rejected and redrawn, at most 16 times. Only donated
    code can add loops or traps, so with ``oracle=False`` other chains skip the
    interpreter run and ``VariantShader.oracle`` stays None.
    """
    if not 1 <= depth <= MAX_DEPTH:
        raise ValueError(f"depth must be in 1..{MAX_DEPTH}")
    seed &= (1 << 64) - 1
    ctx = _context(corpus)
    env = env or default_env(seed)
    if observed is None:
        observed = [n for n, _ in reference.interface("out")]
    ref_result = None
    ref_hash = content_hash(reference)
    last = ""
    for attempt in range(MAX_ATTEMPTS):
        rng = SplitMix64(derive(seed, attempt))
        work = copy.deepcopy(reference)
        chain = []
        try:
            for k in range(depth):
                chain.append(_pick(work, rng, ctx, k + 1))
        except (_Rejected, NotApplicable, NoDonatableRegion) as e:
            last = str(e)
            continue
        donors = {s.params["donor"] for s in chain if s.kind == TransformKind.CodeDonation}
        result = None
        if oracle or donors:
            result = interpret(work, env, observed)
            if not result.ok:
                if ref_result is None:
                    ref_result = interpret(reference, env, observed)
                if ref_result.ok:
                    last = f"variant {result.status}"
                    continue
        recipe = VariantRecipe(reference_name, seed, chain, ref_hash,
                               {d: content_hash(ctx.donor(d)) for d in sorted(donors)}, attempt)
        return VariantShader(work, recipe, reference_name, oracle=result)
    raise GenerationExhausted(reference_name, seed, MAX_ATTEMPTS, last)


def replay_recipe(reference: A.Shader, corpus, recipe: VariantRecipe, *,
                  check_hashes: bool = True) -> VariantShader:
    """Rebuild a variant from its recipe; raises RecipeMismatch on edited inputs."""
    ctx = _context(corpus)
    if check_hashes:
        if recipe.reference_hash and content_hash(reference) != recipe.reference_hash:
            raise RecipeMismatch(f"reference {recipe.reference!r} changed since the recipe was recorded")
        for name, h in recipe.donor_hashes.items():
            donor = ctx.donor(name)
            if donor is None:
                raise RecipeMismatch(f"donor {name!r} missing from corpus")
            if content_hash(donor) != h:
                raise RecipeMismatch(f"donor {name!r} changed since the recipe was recorded")
    if not recipe.chain:
        raise ValueError("recipe chain is empty")
    work = copy.deepcopy(reference)
    for step in recipe.chain:
        _apply_step(work, step, ctx)
    return VariantShader(work, recipe, recipe.reference)


# --- single-transform entry points -----------------------------------------------------------


def _next_uid(shader: A.Shader) -> int:
    return A.max_nid(shader) // STEP_ID_BASE + 1


def _single(shader: A.Shader, kind: TransformKind, site: int, rng, ctx: DonorContext) -> A.Shader:
    work = copy.deepcopy(shader)
    node = index(work).get(site)
    if node is None:
        raise NotApplicable(f"node {site} not present")
    t = TRANSFORMS[kind]
    if site not in set(t.sites(work, ctx)):
        raise NotApplicable(f"{kind.value} does not apply to node {site}")
    params = t.choose(work, node, rng, ctx)
    _apply_step(work, Step(kind, site, _next_uid(work), params), ctx, node)
    return work


def mutate_statement(shader: A.Shader, site: int, rng: SplitMix64) -> A.Shader:
    """Wrap the float or vector expression at ``site`` as ``mix(e, u, 1.0)``."""
    return _single(shader, TransformKind.MixWrap, site, rng, DonorContext({}))


def mutate_control_flow(shader: A.Shader, site: int, kind: TransformKind, rng: SplitMix64) -> A.Shader:
    kind = TransformKind(kind)
    if kind in (TransformKind.MixWrap, TransformKind.CodeDonation):
        raise ValueError(f"{kind.value} is not a control-flow transform")
    return _single(shader, kind, site, rng, DonorContext({}))


def donate_code(target: A.Shader, donor: A.Shader, rng: SplitMix64, donor_name: str = "donor") -> A.Shader:
    ctx = DonorContext({donor_name: donor})
    if not ctx.regions(donor_name):
        raise NoDonatableRegion(f"{donor_name} has no extractable region")
    blocks = TRANSFORMS[TransformKind.CodeDonation].sites(target, ctx)
    return _single(target, TransformKind.CodeDonation, rng.choice(blocks), rng, ctx)
