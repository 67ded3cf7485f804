"""IEEE-754 binary32 arithmetic on Python floats.

Values are kept as Python floats that are exactly representable in binary32.
Each primitive computes in binary64 and rounds once to binary32; for add, sub,
mul, div and sqrt that double rounding is provably identical to a correctly
rounded binary32 operation. Constant folding, the IR runtime and the AST
interpreter all call into these functions, which is what makes their results
bit-identical.
"""

import math
import struct

_F = struct.Struct("<f")
_I = struct.Struct("<I")
_pack = _F.pack
_unpack = _F.unpack

INF = math.inf
NAN = _unpack(_I.pack(0x7FC00000))[0]
UNDEF_BITS = 0x7FC00001
UNDEF_F32 = _unpack(_I.pack(UNDEF_BITS))[0]

INT_MIN = -(1 << 31)
INT_MAX = (1 << 31) - 1


def f32(x: float) -> float:
    try:
        return _unpack(_pack(x))[0]
    except OverflowError:
        return math.copysign(INF, x)


def bits(x: float) -> int:
    return _I.unpack(_pack(x))[0]


def from_bits(b: int) -> float:
    return _unpack(_I.pack(b & 0xFFFFFFFF))[0]


def canonical_bits(x: float) -> int:
    if x != x:
        return 0x7FC00000
    if x == 0.0:
        return 0
    return bits(x)


def fadd(a, b):
    return f32(a + b)


def fsub(a, b):
    return f32(a - b)


def fmul(a, b):
    return f32(a * b)


def fdiv(a, b):
    if b == 0.0:
        if a != a or a == 0.0:
            return NAN
        return math.copysign(INF, a) * math.copysign(1.0, b)
    return f32(a / b)


def fneg(a):
    return -a


def fsqrt(a):
    if a != a or a < 0.0:
        return NAN
    if a == INF:
        return INF
    return f32(math.sqrt(a))


def frsq(a):
    if a != a or a < 0.0:
        return NAN
    if a == 0.0:
        return math.copysign(INF, a)
    if a == INF:
        return 0.0
    return f32(1.0 / math.sqrt(a))


def fsin(a):
    if a != a or a in (INF, -INF):
        return NAN
    return f32(math.sin(a))


def fcos(a):
    if a != a or a in (INF, -INF):
        return NAN
    return f32(math.cos(a))


def ffloor(a):
    if a != a or a == 0.0 or a in (INF, -INF):
        return a
    return float(math.floor(a))


def fabs(a):
    return math.fabs(a)


def fmin(a, b):
    # GLSL: min(x, y) = y < x ? y : x
    return b if b < a else a


def fmax(a, b):
    # GLSL: max(x, y) = x < y ? y : x
    return b if a < b else a


def fmix(x, y, c):
    """Blend ``x*c + y*(1-c)``; exact endpoints so c == 1 yields x and c == 0 yields y."""
    if c == 1.0:
        return x
    if c == 0.0:
        return y
    return f32(f32(x * c) + f32(y * f32(1.0 - c)))


def wrap32(x: int) -> int:
    return ((x + 0x80000000) & 0xFFFFFFFF) - 0x80000000


def sdiv(a: int, b: int) -> int:
    """Truncating signed division; caller handles b == 0."""
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return wrap32(q)


def fptosi(x: float) -> int:
    if x != x:
        return 0
    if x >= 2147483647.0:
        return INT_MAX
    if x <= -2147483648.0:
        return INT_MIN
    return int(x)


def sitofp(i: int) -> float:
    return f32(float(i))


def shortest_repr(x: float) -> str:
    """Shortest decimal text that parses back to the same binary32 value."""
    if x != x:
        return "nan"
    if x in (INF, -INF):
        return "inf" if x > 0 else "-inf"
    for p in range(1, 10):
        s = "%.*g" % (p, x)
        if f32(float(s)) == x and (x != 0.0 or math.copysign(1.0, float(s)) == math.copysign(1.0, x)):
            break
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s
