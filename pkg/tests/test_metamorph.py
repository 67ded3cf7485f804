import json
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from shaderfuzz.metamorph import (DonorContext, GenerationExhausted, NoDonatableRegion, NotApplicable,
                                  RecipeMismatch, TransformKind, VariantRecipe, donate_code,
                                  generate_variant, mutate_control_flow, mutate_statement, replay_recipe)
from shaderfuzz.metamorph.generate import default_env
from shaderfuzz.rng import SplitMix64
from shaderfuzz.shader_lang import ast as A
from shaderfuzz.shader_lang.checker import typecheck
from shaderfuzz.shader_lang.interp import interpret
from shaderfuzz.shader_lang.parser import parse
from shaderfuzz.shader_lang.printer import pretty_print

from conftest import shader


def _find(ast, pred):
    return next(n for n in A.walk(ast) if pred(n))


def _same_output(a, b, seeds=(0, 1, 2)):
    outs = [n for n, _ in a.interface("out")]
    for s in seeds:
        env = default_env(s)
        ra, rb = interpret(a, env, outs), interpret(b, env, outs)
        if (ra.status, ra.output_hash) != (rb.status, rb.output_hash):
            return False
    return True


ADD = "in float a;\nin float b;\nout float x;\nvoid main() { x = a + b; }\n"


def test_mix_wrap_statement():
    ref = shader(ADD)
    site = _find(ref, lambda n: isinstance(n, A.Binary) and n.op == "+").nid
    out = mutate_statement(ref, site, SplitMix64(0))
    text = pretty_print(out)
    assert "x = mix(a + b, " in text and ", 1.0);" in text
    assert _same_output(ref, out)


def test_mix_wrap_rejects_bool():
    ref = shader("in float a;\nout float x;\nvoid main() { bool c = a > 0.5; if (c) { x = 1.0; } else { x = 0.0; } }\n")
    site = _find(ref, lambda n: isinstance(n, A.Binary) and n.op == ">").nid
    with pytest.raises(NotApplicable):
        mutate_statement(ref, site, SplitMix64(0))


FOR3 = "out float o;\nvoid main() { float s = 0.0; for (int i = 0; i < 3; i++) { s += float(i); } o = s; }\n"


def test_for_to_while():
    ref = shader(FOR3)
    site = _find(ref, lambda n: isinstance(n, A.For)).nid
    out = mutate_control_flow(ref, site, TransformKind.ForToWhile, SplitMix64(0))
    text = pretty_print(out)
    assert "while (i < 3)" in text and "for" not in text
    assert _same_output(ref, out)


def test_for_with_continue_not_applicable():
    ref = shader("in float x;\nout float o;\nvoid main() { float s = 0.0; for (int i = 0; i < 3; i++) { if (x > 0.5) { continue; } s += 1.0; } o = s; }\n")
    site = _find(ref, lambda n: isinstance(n, A.For)).nid
    with pytest.raises(NotApplicable):
        mutate_control_flow(ref, site, TransformKind.ForToWhile, SplitMix64(0))


def test_single_iteration_wrap():
    ref = shader("out float s;\nvoid main() { s = 2.0; }\n")
    site = _find(ref, lambda n: isinstance(n, A.Assign)).nid
    out = mutate_control_flow(ref, site, TransformKind.SingleIterationLoopWrap, SplitMix64(0))
    assert "for (int k0 = 0; k0 < 1; k0++)" in pretty_print(out)
    assert _same_output(ref, out)


def test_full_unroll_trip3():
    ref = shader(FOR3)
    site = _find(ref, lambda n: isinstance(n, A.For)).nid
    rng = SplitMix64(0)
    for _ in range(20):
        out = mutate_control_flow(ref, site, TransformKind.LoopUnroll, rng)
        text = pretty_print(out)
        if "for" not in text:
            break
    assert "for" not in text
    assert text.count("s += float(") == 3
    assert _same_output(ref, out)


def test_if_to_switch():
    ref = shader("in float x;\nout float o;\nvoid main() { if (x > 0.5) { o = 1.0; } else { o = 2.0; } }\n")
    site = _find(ref, lambda n: isinstance(n, A.If)).nid
    out = mutate_control_flow(ref, site, TransformKind.IfToSwitch, SplitMix64(0))
    assert "switch (int(x > 0.5))" in pretty_print(out)
    assert _same_output(ref, out)


def test_mix_wrap_not_a_control_flow_kind():
    ref = shader(FOR3)
    with pytest.raises(ValueError):
        mutate_control_flow(ref, 1, TransformKind.MixWrap, SplitMix64(0))


def test_donation_into_empty_main(corpus_by_name):
    target = shader("void main() {}\n")
    donor = corpus_by_name["int_arith"].ast
    out = donate_code(target, donor, SplitMix64(5), "int_arith")
    text = pretty_print(out)
    assert "donated_out0" in text
    assert [n for n, _ in out.interface("out")] == ["donated_out0"]
    donor_names = {g.name for g in donor.globals} | {n.name for n in A.walk(donor) if isinstance(n, A.VarDecl)}
    declared = {n.name for n in A.walk(out) if isinstance(n, A.VarDecl)}
    assert not declared & donor_names


def test_donation_renames_colliding_names():
    donor = shader("in float p;\nout float q;\nvoid main() { float tmp = p * 2.0; tmp = tmp + 1.0; q = tmp; }\n")
    target = shader("in float x;\nout float o;\nvoid main() { float tmp = x; o = tmp * 3.0; }\n")
    for seed in range(10):
        out = typecheck(donate_code(target, donor, SplitMix64(seed), "d"))
        assert not any("shadows" in d for d in out.diagnostics)
        assert sum(1 for n in A.walk(out) if isinstance(n, A.VarDecl) and n.name == "tmp") == 1
        assert _same_output(target, out)


def test_no_donatable_region():
    donor = shader("in vec2 uv;\nuniform sampler2D t;\nout vec4 c;\nvoid main() { c = texture2D(t, uv); }\n")
    with pytest.raises(NoDonatableRegion):
        donate_code(shader("void main() {}\n"), donor, SplitMix64(0), "tex")


def test_depth1_replay(corpus):
    ctx = DonorContext({e.name: e.ast for e in corpus})
    e = corpus[3]
    v = generate_variant(e.ast, ctx, 123, 1, reference_name=e.name)
    assert v.recipe.depth == 1
    assert replay_recipe(e.ast, ctx, v.recipe).text == v.text


def test_depth_bounds(corpus):
    with pytest.raises(ValueError):
        generate_variant(corpus[0].ast, None, 0, 0)
    with pytest.raises(ValueError):
        generate_variant(corpus[0].ast, None, 0, 33)


def test_depth8_variants_preserve_output(corpus):
    ctx = DonorContext({e.name: e.ast for e in corpus})
    for k, e in enumerate(corpus):
        v = generate_variant(e.ast, ctx, 1000 + k, 8, reference_name=e.name)
        assert v.recipe.depth == 8
        assert v.oracle.output_hash == interpret(e.ast, default_env(1000 + k), e.outputs).output_hash
        again = typecheck(parse(v.text))
        assert pretty_print(again) == v.text
        assert again.interface("in") == e.ast.interface("in")
        assert again.interface("uniform") == e.ast.interface("uniform")
        outs = [n for n, _ in again.interface("out")]
        assert outs[:len(e.outputs)] == e.outputs
        assert all(n.startswith("donated_out") for n in outs[len(e.outputs):])


def test_recipe_json_round_trip(corpus):
    ctx = DonorContext({e.name: e.ast for e in corpus})
    v = generate_variant(corpus[0].ast, ctx, 77, 6, reference_name=corpus[0].name)
    line = v.recipe.dumps()
    assert "\n" not in line
    back = VariantRecipe.loads(line)
    assert back == v.recipe
    assert replay_recipe(corpus[0].ast, ctx, back).text == v.text


def test_recipe_mismatch_on_edited_inputs(corpus):
    ctx = DonorContext({e.name: e.ast for e in corpus})
    e = corpus[0]
    v = generate_variant(e.ast, ctx, 5, 4, reference_name=e.name)
    edited = shader(e.text.replace("void main() {", "void main() {\n    float extra_edit = 1.0;", 1))
    with pytest.raises(RecipeMismatch):
        replay_recipe(edited, ctx, v.recipe)
    donated = None
    for seed in range(200):
        w = generate_variant(e.ast, ctx, seed, 8, reference_name=e.name)
        if w.recipe.donor_hashes:
            donated = w
            break
    assert donated is not None
    name = donated.recipe.donor_names[0]
    edited_ctx = dict(ctx.corpus)
    edited_ctx[name] = shader(pretty_print(ctx.corpus[name]).replace("void main() {", "void main() {\n    float extra_edit = 1.0;", 1))
    with pytest.raises(RecipeMismatch):
        replay_recipe(e.ast, DonorContext(edited_ctx), donated.recipe)


def test_generation_exhausted_when_nothing_applies():
    ref = shader("void main() {}\n")
    with pytest.raises(GenerationExhausted):
        generate_variant(ref, None, 0, 1)


def test_cross_process_replay(corpus, manifest):
    e = corpus[5]
    ctx = DonorContext({x.name: x.ast for x in corpus})
    v = generate_variant(e.ast, ctx, 99, 6, reference_name=e.name)
    code = (
        "import sys\n"
        "from shaderfuzz.harness import load_corpus\n"
        "from shaderfuzz.metamorph import DonorContext, VariantRecipe, replay_recipe\n"
        f"c = load_corpus({manifest!r})\n"
        "by = {x.name: x for x in c}\n"
        "r = VariantRecipe.loads(sys.stdin.read())\n"
        "sys.stdout.write(replay_recipe(by[r.reference].ast, DonorContext({x.name: x.ast for x in c}), r).text)\n"
    )
    out = subprocess.run([sys.executable, "-c", code], input=v.recipe.dumps(), capture_output=True, text=True, check=True)
    assert out.stdout == v.text


@given(seed=st.integers(0, 2**64 - 1), depth=st.integers(1, 8), which=st.integers(0, 22))
@settings(max_examples=40, deadline=None)
def test_semantic_preservation_property(corpus, seed, depth, which):
    e = corpus[which % len(corpus)]
    ctx = DonorContext({x.name: x.ast for x in corpus})
    v = generate_variant(e.ast, ctx, seed, depth, reference_name=e.name)
    ref = interpret(e.ast, default_env(seed), e.outputs)
    assert (v.oracle.status, v.oracle.output_hash) == (ref.status, ref.output_hash)
    assert generate_variant(e.ast, ctx, seed, depth, reference_name=e.name).text == v.text
