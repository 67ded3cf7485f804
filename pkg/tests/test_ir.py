import pytest

from shaderfuzz.ir import (IrParseError, VerifyError, build_ddg, ddg_diff, lower, parse_module,
                           print_module, slice_outputs, verify)
from shaderfuzz.ir.core import FGET, FSET, Inst
from shaderfuzz.opt.pipeline import executable
from shaderfuzz.runtime import ExecEnv, execute
from shaderfuzz.shader_lang.interp import interpret

from conftest import shader


def test_passthrough_lowers_to_fget_fset():
    m = lower(shader("in vec4 a_color;\nout vec4 v_out;\nvoid main() { v_out = a_color; }\n"))
    text = print_module(m)
    assert "@a_color = input global <4 x float>" in text
    assert FGET in text and FSET in text
    verify(m)


def test_mediump_lowers_to_fptrunc():
    m = lower(shader("in float x;\nout float o;\nvoid main() { mediump float h = x; o = h; }\n"))
    assert "fptrunc" in print_module(m)


def test_empty_main_is_single_return():
    m = lower(shader("void main() {}\n"))
    insts = list(m.main.insts())
    assert [i.op for i in insts] == ["ret"]


def test_corpus_lowering_verifies_and_round_trips(corpus):
    for e in corpus:
        m = lower(e.ast, e.name)
        verify(m)
        text = print_module(m)
        again = parse_module(text)
        verify(again)
        assert print_module(again) == text


def _mutate_text(text, old, new):
    assert old in text
    return text.replace(old, new, 1)


def test_duplicate_value_id_rejected():
    text = print_module(lower(shader("in float x;\nout float o;\nvoid main() { o = x * 2.0 + 1.0; }\n")))
    lines = text.splitlines()
    defs = [k for k, l in enumerate(lines) if l.strip().startswith("%")]
    first = lines[defs[0]].split("=")[0].strip()
    second = lines[defs[1]].split("=")[0].strip()
    bad = "\n".join(lines[:defs[1]] + [lines[defs[1]].replace(second + " =", first + " =", 1)] + lines[defs[1] + 1:])
    with pytest.raises((VerifyError, IrParseError)) as e:
        verify(parse_module(bad))
    assert "Ssa" in str(e.value) or "defined" in str(e.value)


def test_missing_terminator_rejected():
    text = print_module(lower(shader("void main() {}\n")))
    bad = "\n".join(l for l in text.splitlines() if l.strip() != "ret void")
    with pytest.raises((VerifyError, IrParseError)) as e:
        verify(parse_module(bad))
    assert "Terminator" in str(e.value) or "terminator" in str(e.value)


def test_ddg_edges_small_module():
    # o = (x + y) * 2.0 : fget x, fget y, fadd, fmul, fset, ret
    m = lower(shader("in float x;\nin float y;\nout float o;\nvoid main() { o = (x + y) * 2.0; }\n"))
    d = build_ddg(m)
    ops = {k: i.op for k, i in d.nodes.items()}
    by_op = {}
    for k, op in ops.items():
        by_op.setdefault(op, []).append(k)
    # hand enumeration: x->fadd, y->fadd, fadd->fmul, fmul->fset
    assert len(d.nodes) == 6
    assert len(d.edges) == 4
    fadd, fmul = by_op["fadd"][0], by_op["fmul"][0]
    assert (fadd, fmul) in d.edges
    assert sum(1 for a, b in d.edges if b == fadd) == 2


def test_ddg_edge_count_equals_inst_operands(corpus):
    for e in corpus:
        m = lower(e.ast, e.name)
        d = build_ddg(m)
        n = sum(1 for i in m.main.insts() for a in i.args if type(a) is Inst)
        assert len(d.edges) == n, e.name


def test_slice_excludes_dead_arithmetic():
    m = lower(shader("in float x;\nout float o;\nvoid main() { float dead = x * 3.0; o = x + 1.0; }\n"))
    sl = slice_outputs(m, build_ddg(m))["o"]
    ops = [i.op for i in sl.insts]
    assert "fadd" in ops and "fmul" not in ops


def test_ddg_diff_identical_is_empty(corpus):
    e = corpus[0]
    m = lower(e.ast, e.name)
    for slot, s in slice_outputs(m, build_ddg(m)).items():
        assert ddg_diff(s, s).empty


def test_lowering_oracle_on_corpus(corpus):
    # full 100-seed sweep lives in the acceptance suite
    for e in corpus:
        m = executable(lower(e.ast, e.name))
        for seed in (0, 1, 42):
            env = ExecEnv(seed, seed)
            a, b = interpret(e.ast, env, e.outputs), execute(m, env, e.outputs)
            assert (a.status, a.output_hash) == (b.status, b.output_hash), (e.name, seed)


CASCADE = """in float a;
out float o;
void main() {
    float p = a;
    for (int i = 0; i < 3; i++) {
        int n = 0;
        do {
            n++;
            for (int k = 0; k < 1; k++) {
            }
        } while (n < 10);
        for (int j = 0; j < 4; j++) {
            p = p + 1.0;
        }
    }
    o = p;
}
"""


def test_trivial_phi_cascade_leaves_no_dangling_operand():
    # removing one trivial phi can make its replacement trivial too
    ast = shader(CASCADE)
    m = lower(ast)
    verify(m)
    env = ExecEnv(3, 3)
    a, b = interpret(ast, env, ["o"]), execute(executable(m), env, ["o"])
    assert (a.status, a.output_hash) == (b.status, b.output_hash)
