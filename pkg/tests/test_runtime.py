import math
import struct

import pytest
from hypothesis import given, settings, strategies as st

from shaderfuzz import fp32
from shaderfuzz.ir import lower
from shaderfuzz.rng import SplitMix64, derive
from shaderfuzz.runtime import ExecEnv, canonical_hash, execute, sample, seed_inputs, seed_lanes
from shaderfuzz.runtime.executor import HalfPrecisionError
from shaderfuzz.shader_lang.interp import interpret

from conftest import load_golden, shader

G = load_golden("runtime.json")


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & (2**64 - 1)
    return h


def test_fnv_reference_vector():
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C


def test_splitmix64_reference_outputs():
    g = SplitMix64(0)
    assert [f"{g.next_u64():016x}" for _ in range(3)] == G["splitmix64_seed0"]


def test_seed42_lanes_golden():
    assert list(seed_lanes(42, 0, 4)) == G["seed42_slot0_lanes"]


def test_seed_inputs_deterministic():
    m = lower(shader("in vec4 a;\nin float b;\nout float o;\nvoid main() { o = a.x + b; }\n"))
    assert seed_inputs(m, ExecEnv(3, 3)) == seed_inputs(m, ExecEnv(3, 3))
    vals = [v for lanes in seed_inputs(m, ExecEnv(3, 3)).values() for v in lanes]
    assert all(0.0 <= v < 1.0 and fp32.f32(v) == v for v in vals)


def test_sampler_golden_and_wrap():
    env = ExecEnv(sampler_seed=7)
    assert list(sample(0, (0.5, 0.5), env)) == G["texel_seed7_unit0_half"]
    assert sample(0, (0.5, 0.5), env) == sample(0, (0.5, 0.5), env)
    assert sample(0, (0.0, 0.0), env) == sample(0, (1.0, 1.0), env)
    assert sample(0, (0.0, 0.0), env) != sample(1, (0.0, 0.0), env)


def test_vec4_one_golden():
    r = execute(lower(shader("out vec4 v_out;\nvoid main() { v_out = vec4(1.0); }\n")), ExecEnv(42, 42))
    assert r.ok and r.outputs["v_out"] == (1.0, 1.0, 1.0, 1.0)
    assert f"{r.output_hash:016x}" == G["vec4_one_hash"]
    assert r.output_hash == fnv1a64(struct.pack("<4f", 1.0, 1.0, 1.0, 1.0))


def test_seeded_input_hash_golden():
    ast = shader("in vec4 a_color;\nout vec4 v_out;\nvoid main() { v_out = a_color * 2.0; }\n")
    r = execute(lower(ast), ExecEnv(42, 42))
    assert f"{r.output_hash:016x}" == G["color_times_two_hash_seed42"]
    assert r.outputs["v_out"] == tuple(2 * x for x in G["seed42_slot0_lanes"])


def test_corpus_hash_goldens(corpus):
    from shaderfuzz.opt.pipeline import executable

    gold = load_golden("corpus_hashes_seed42.json")
    for e in corpus:
        r = execute(executable(lower(e.ast, e.name)), ExecEnv(42, 42), e.outputs)
        assert r.to_json()["hash"] == gold[e.name], e.name


def test_infinite_loop_hits_step_budget():
    ast = shader("out float o;\nvoid main() { float s = 0.0; while (true) { s += 1.0; } o = s; }\n")
    r = execute(lower(ast), ExecEnv(step_budget=5000))
    assert r.status == "StepBudgetExceeded" and r.output_hash is None
    assert r.steps <= 5000


def test_int_division_by_zero_traps():
    ast = shader("in float x;\nout float o;\nvoid main() { int z = int(x * 0.0); int q = 1 / z; o = float(q); }\n")
    r = execute(lower(ast), ExecEnv())
    assert r.status == "Trap" and r.reason == "IntDivByZero"
    assert interpret(ast, ExecEnv()).reason == "IntDivByZero"


def test_half_arithmetic_rejected_at_runtime():
    m = lower(shader("in float x;\nout float o;\nvoid main() { mediump float h = x * 2.0; o = h * h; }\n"))
    with pytest.raises(HalfPrecisionError):
        execute(m, ExecEnv())


def test_hash_canonicalizes_nan_and_negative_zero():
    nan2 = fp32.from_bits(0x7FC00123)
    assert canonical_hash({"o": (fp32.NAN,)}) == canonical_hash({"o": (nan2,)})
    assert canonical_hash({"o": (0.0,)}) == canonical_hash({"o": (-0.0,)})


def test_hash_slot_order_is_by_name():
    assert canonical_hash({"b": (1.0,), "a": (2.0,)}) == fnv1a64(struct.pack("<2f", 2.0, 1.0))


def test_hash_detects_every_single_bit_flip():
    base = (0.25, 0.5, 0.75)
    h = canonical_hash({"o": base})
    for lane in range(3):
        for bit in range(31):  # bit 31 of a zero-free set is the sign, also distinct
            b = fp32.bits(base[lane]) ^ (1 << bit)
            v = list(base)
            v[lane] = fp32.from_bits(b)
            if v[lane] != v[lane]:
                continue
            assert canonical_hash({"o": tuple(v)}) != h


@given(st.integers(0, 2**64 - 1), st.integers(0, 7))
@settings(max_examples=50, deadline=None)
def test_seed_lanes_in_unit_interval(seed, ordinal):
    for v in seed_lanes(seed, ordinal, 4):
        assert 0.0 <= v < 1.0


@given(st.floats(width=32, allow_nan=False), st.floats(width=32, allow_nan=False))
@settings(max_examples=100, deadline=None)
def test_mix_endpoints_exact(x, y):
    assert fp32.bits(fp32.fmix(x, y, 1.0)) == fp32.bits(x)
    assert fp32.bits(fp32.fmix(x, y, 0.0)) == fp32.bits(y)


@given(st.floats(width=32, allow_nan=False, allow_infinity=False),
       st.floats(width=32, allow_nan=False, allow_infinity=False))
@settings(max_examples=100, deadline=None)
def test_fadd_is_binary32_round_to_nearest(a, b):
    import numpy as np

    with np.errstate(over="ignore"):
        expect = float(np.float32(a) + np.float32(b))
    assert fp32.bits(fp32.fadd(a, b)) == fp32.bits(expect) or math.isinf(expect)
