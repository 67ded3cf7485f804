import time

import pytest
from hypothesis import given, settings, strategies as st

from shaderfuzz.ir import lower, parse_module, print_module, verify
from shaderfuzz.ir.core import clone_module
from shaderfuzz.opt import (BugId, PipelineConfig, const_fold, dce, first_divergent_snapshot, half_promote,
                            loop_unroll, run_pipeline)
from shaderfuzz.opt.half import has_half
from shaderfuzz.opt.loops import find_loops
from shaderfuzz.opt.pipeline import PassId, executable
from shaderfuzz.runtime import ExecEnv, execute

from conftest import shader

SWITCH_SRC = """in float x;
out float o;
void main() {
    switch (int(x > 0.5)) {
    case 1: { o = x * 2.0; } break;
    default: { o = 2.0; } break;
    }
}
"""
MIX_SRC = "in float a;\nin float b;\nout float o;\nvoid main() { o = mix(a + b, 0.5, 1.0); }\n"
TRIP1_SRC = "in float x;\nout float o;\nvoid main() { float s = 0.0; for (int i = 0; i < 1; i++) { s += x; } o = s; }\n"
TRIP4_SRC = "in float x;\nout float o;\nvoid main() { float s = 0.0; for (int i = 0; i < 4; i++) { s += x * float(i); } o = s; }\n"


def _hash(m, seed=1):
    return execute(executable(m), ExecEnv(seed, seed)).output_hash


def _bugs(*b):
    return PipelineConfig(injected_bugs=frozenset(b))


def test_const_fold_constant_add():
    m = lower(shader("out float o;\nvoid main() { o = 2.0 + 3.0; }\n"))
    out, changed = const_fold(m)
    assert changed
    text = print_module(out)
    assert "fadd" not in text and "5.0" in text


def test_dce_removes_unused_value():
    m = lower(shader("in float x;\nout float o;\nvoid main() { float d = x * 7.0; o = x; }\n"))
    out, changed = dce(m)
    assert changed and "fmul" not in print_module(out)


def test_unchanged_pass_leaves_module_equal():
    m = run_pipeline(lower(shader(MIX_SRC))).ir
    out, changed = dce(m)
    assert not changed and print_module(out) == print_module(m)


def test_loop_unroll_trip4_removes_back_edge():
    m = lower(shader(TRIP4_SRC))
    assert find_loops(m.main)
    out, changed = loop_unroll(m)
    assert changed and not find_loops(out.main)
    verify(out)
    assert _hash(out) == _hash(m)


def test_clean_pipeline_preserves_corpus(corpus):
    for e in corpus:
        m = lower(e.ast, e.name)
        r = run_pipeline(m)
        assert r.status == "Completed", e.name
        verify(r.ir)
        for seed in (0, 9):
            env = ExecEnv(seed, seed)
            assert execute(executable(r.ir), env, e.outputs).output_hash == \
                execute(executable(m), env, e.outputs).output_hash, e.name


def test_fixpoint_idempotence(corpus):
    for e in corpus:
        out = run_pipeline(lower(e.ast, e.name)).ir
        again = run_pipeline(out)
        assert again.iterations == 1 and print_module(again.ir) == print_module(out), e.name


def test_budget_monotonicity(corpus):
    e = corpus[0]
    m = lower(e.ast, e.name)
    a = run_pipeline(m, PipelineConfig(fixpoint_budget=64))
    b = run_pipeline(m, PipelineConfig(fixpoint_budget=200))
    assert print_module(a.ir) == print_module(b.ir)


def test_trace_snapshots_and_final(corpus):
    e = corpus[0]
    r = run_pipeline(lower(e.ast, e.name), PipelineConfig(trace=True))
    snaps = r.trace.snapshots
    assert snaps[0].pass_name == "Input"
    assert len(snaps) == 1 + r.iterations * len(PipelineConfig().passes)
    assert snaps[-1].text == print_module(r.ir)
    for s in snaps:
        verify(parse_module(s.text))


def test_trace_dump_names(tmp_path, corpus):
    r = run_pipeline(lower(corpus[0].ast), PipelineConfig(trace=True))
    paths = r.trace.dump(str(tmp_path))
    assert paths[0].endswith("0000_Input.ir") and paths[1].endswith("0001_HalfPromote.ir")


def test_half_promote_aliases_fpext_of_fptrunc():
    m = lower(shader("in float x;\nout float o;\nvoid main() { mediump float h = x; o = h; }\n"))
    assert has_half(m)
    out, changed = half_promote(m)
    assert changed and not has_half(out)
    text = print_module(out)
    assert "fptrunc" not in text and "fpext" not in text


def test_half_promote_noop_on_f32(corpus):
    for e in corpus:
        m = lower(e.ast, e.name)
        if has_half(m):
            continue
        out, changed = half_promote(m)
        assert not changed and print_module(out) == print_module(m)


def test_half_promote_mediump_corpus(corpus):
    for e in corpus:
        if not e.name.startswith("mediump"):
            continue
        out = run_pipeline(lower(e.ast, e.name)).ir
        assert not has_half(out)
        verify(out)


def test_pipeline_rejects_half_promote_after_arith():
    with pytest.raises(ValueError):
        PipelineConfig(passes=(PassId.ConstFold, PassId.HalfPromote))
    with pytest.raises(ValueError):
        PipelineConfig(fixpoint_budget=0)


def test_unroll_bug_stalls_at_budget():
    m = lower(shader(TRIP1_SRC))
    t0 = time.perf_counter()
    r = run_pipeline(m, _bugs(BugId.UnrollNonterminating))
    assert r.status == "StallBudgetExceeded" and r.iterations == 64
    assert time.perf_counter() - t0 < 5.0
    r = run_pipeline(m, PipelineConfig(fixpoint_budget=7, injected_bugs=frozenset({BugId.UnrollNonterminating})))
    assert r.status == "StallBudgetExceeded" and r.iterations == 7


def test_peephole_bug_faults():
    r = run_pipeline(lower(shader(SWITCH_SRC)), _bugs(BugId.PeepholeNullDeref))
    assert r.status == "InternalFault" and r.fault_pass == "Peephole"


def test_dce_bug_localized():
    m = lower(shader(SWITCH_SRC))
    r = run_pipeline(m, _bugs(BugId.DceDropsLiveStore).with_trace())
    assert r.status == "Completed"
    env = ExecEnv(1, 1)
    diverged = [s for s in range(8) if _hash(r.ir, s) != _hash(m, s)]
    assert diverged
    s = diverged[0]
    assert first_divergent_snapshot(r.trace, ExecEnv(s, s)) == "Dce"


def test_inst_combine_bug_localized():
    m = lower(shader(MIX_SRC))
    r = run_pipeline(m, _bugs(BugId.InstCombineWrongIdentity).with_trace())
    assert _hash(r.ir) != _hash(m)
    assert first_divergent_snapshot(r.trace, ExecEnv(1, 1)) == "InstCombine"


def test_clean_trace_has_no_divergence(corpus):
    for e in corpus[:5]:
        r = run_pipeline(lower(e.ast, e.name), PipelineConfig(trace=True))
        assert first_divergent_snapshot(r.trace, ExecEnv(3, 3), e.outputs) is None


def test_no_bug_fires_without_injection():
    for src in (SWITCH_SRC, MIX_SRC, TRIP1_SRC):
        m = lower(shader(src))
        r = run_pipeline(m)
        assert r.status == "Completed"
        assert _hash(r.ir) == _hash(m)


@given(st.integers(0, 2**64 - 1))
@settings(max_examples=25, deadline=None)
def test_clean_pipeline_random_seeds(seed):
    m = lower(shader(TRIP4_SRC))
    assert _hash(run_pipeline(m).ir, seed) == _hash(m, seed)
