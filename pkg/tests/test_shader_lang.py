import pytest
from hypothesis import given, settings, strategies as st

from shaderfuzz.shader_lang import ast as A
from shaderfuzz.shader_lang.checker import typecheck
from shaderfuzz.shader_lang.errors import ParseError, ShaderTypeError, TypeErrorKind
from shaderfuzz.shader_lang.parser import SourceShader, parse
from shaderfuzz.shader_lang.printer import pretty_print

from conftest import shader


def test_minimal_program():
    ast = parse(SourceShader("out vec4 v_out;\nvoid main() { v_out = vec4(1.0); }\n", "fragment", "min"))
    assert len(ast.globals) == 1 and len(ast.functions) == 1
    assert ast.entry.name == "main"


def test_parse_error_location():
    with pytest.raises(ParseError) as e:
        parse("void main( {")
    assert e.value.line == 1


def test_source_shader_rejects_empty():
    with pytest.raises(ValueError):
        SourceShader("", "fragment", "x")


def test_local_float_type():
    ast = shader("out float o;\nvoid main() { float x = 1.0 + 2.0; o = x; }\n")
    decl = ast.entry.body.stmts[0]
    assert decl.type == "float" and decl.init.ty == "float"


def test_vec_mismatch_rejected():
    with pytest.raises(ShaderTypeError) as e:
        shader("out float o;\nvoid main() { vec3 v = vec2(1.0, 2.0); o = 1.0; }\n")
    assert e.value.kind == TypeErrorKind.TypeMismatch
    assert e.value.location[0] == 2


def test_mix_of_vec4_is_vec4():
    ast = shader("in vec4 a;\nin vec4 b;\nout vec4 o;\nvoid main() { o = mix(a, b, 1.0); }\n")
    assert ast.entry.body.stmts[0].value.ty == "vec4"


@pytest.mark.parametrize("src,kind", [
    ("out float o;\nvoid main() { o = y; }\n", TypeErrorKind.UndeclaredIdentifier),
    ("out float o;\nvoid main() { o = sin(1.0, 2.0); }\n", TypeErrorKind.ArityMismatch),
    ("out float o;\nvoid main() { o = 1.0; }\nvoid main() { o = 2.0; }\n", TypeErrorKind.MultipleMain),
    ("in float o;\nvoid main() { o = 1.0; }\n", TypeErrorKind.InvalidQualifier),
])
def test_type_error_kinds(src, kind):
    with pytest.raises(ShaderTypeError) as e:
        shader(src)
    assert e.value.kind == kind
    line, col = e.value.location
    assert 1 <= line <= src.count("\n") and col >= 1


def test_partial_output_write_warns():
    ast = shader("in float x;\nout float o;\nvoid main() { if (x > 0.5) { o = 1.0; } }\n")
    assert any("not written on every path" in d for d in ast.diagnostics)


def test_pretty_print_empty_main():
    assert pretty_print(parse("void main(){}")) == "void main() {\n}\n"


def test_for_is_printed_as_for():
    text = pretty_print(shader("out float o;\nvoid main() { float s = 0.0; for (int i = 0; i < 3; i++) { s += 1.0; } o = s; }\n"))
    assert "for (int i = 0; i < 3; i++)" in text
    assert "while" not in text


def test_corpus_round_trip(corpus):
    for e in corpus:
        again = parse(pretty_print(e.ast))
        assert again == parse(e.text), e.name
        assert pretty_print(again) == pretty_print(e.ast)


def test_parse_is_deterministic(corpus):
    e = corpus[0]
    assert pretty_print(typecheck(parse(e.text))) == pretty_print(typecheck(parse(e.text)))


_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, width=32)


@given(a=_floats, b=_floats, op=st.sampled_from(["+", "-", "*"]))
@settings(max_examples=60, deadline=None)
def test_literal_expressions_round_trip(a, b, op):
    src = f"out float o;\nvoid main() {{ o = {a!r} {op} ({b!r}); }}\n"
    ast = shader(src)
    assert parse(pretty_print(ast)) == ast
