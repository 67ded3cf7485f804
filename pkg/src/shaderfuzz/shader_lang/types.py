"""Scalar/vector type helpers shared by the checker, interpreter and lowering."""

_VECS = {}
for _b, _p in (("float", "vec"), ("int", "ivec"), ("bool", "bvec")):
    _VECS[_b] = (_b, 1)
    for _n in (2, 3, 4):
        _VECS[f"{_p}{_n}"] = (_b, _n)

_MAKE = {v: k for k, v in _VECS.items()}

FLOAT_TYPES = {"float", "vec2", "vec3", "vec4"}
NUMERIC_TYPES = set(_VECS) - {"bool", "bvec2", "bvec3", "bvec4"}
VALUE_TYPES = set(_VECS)


def base(t: str) -> str:
    return _VECS[t][0]


def size(t: str) -> int:
    return _VECS[t][1]


def make(base_: str, n: int) -> str:
    return _MAKE[(base_, n)]


def is_vector(t: str) -> bool:
    return t in _VECS and _VECS[t][1] > 1


def is_value(t: str) -> bool:
    return t in _VECS


def zero(t: str):
    """Zero value in the interpreter's representation."""
    b, n = _VECS[t]
    z = {"float": 0.0, "int": 0, "bool": False}[b]
    return z if n == 1 else (z,) * n


SWIZZLE_SETS = ("xyzw", "rgba", "stpq")


def swizzle_indices(comps: str):
    for s in SWIZZLE_SETS:
        if all(c in s for c in comps):
            return [s.index(c) for c in comps]
    return None
