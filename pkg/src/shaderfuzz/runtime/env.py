"""Execution environment, deterministic input/texel generation and output hashing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from ..fp32 import canonical_bits
from ..rng import derive, unit_f32

_UNIFORM_SALT = 0x554E49464F524D  # "UNIFORM"
TEXTURE_SIZE = 256

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


@dataclass
class ExecEnv:
    input_seed: int = 0
    sampler_seed: int = 0
    uniform_values: dict = field(default_factory=dict)
    step_budget: int = 1_000_000

    def __post_init__(self):
        if self.step_budget < 1:
            raise ValueError("step_budget must be positive")


@dataclass
class ExecResult:
    status: str  # "Ok" | "Trap" | "StepBudgetExceeded"
    output_hash: Optional[int]
    steps: int
    outputs: dict = field(default_factory=dict)
    reason: Optional[str] = None
    diagnostics: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == "Ok"

    def to_json(self) -> dict:
        d = {
            "status": self.status,
            "hash": None if self.output_hash is None else f"{self.output_hash:016x}",
            "steps": self.steps,
        }
        if self.reason is not None:
            d["reason"] = self.reason
        return d


def seed_lanes(seed: int, ordinal: int, n: int) -> tuple:
    """Lanes of the ``ordinal``-th input slot, each in [0, 1)."""
    return tuple(unit_f32(derive(seed, ordinal, lane)) for lane in range(n))


def uniform_lanes(env: ExecEnv, name: str, ordinal: int, n: int) -> tuple:
    if name in env.uniform_values:
        v = env.uniform_values[name]
        v = tuple(v) if isinstance(v, (list, tuple)) else (v,)
        if len(v) != n:
            raise ValueError(f"uniform {name!r} expects {n} lanes, got {len(v)}")
        return tuple(float(x) for x in v)
    return tuple(unit_f32(derive(env.input_seed, _UNIFORM_SALT, ordinal, lane)) for lane in range(n))


def _texel(c: float) -> int:
    if c != c or c in (math.inf, -math.inf):
        return 0
    return math.floor(c * TEXTURE_SIZE) % TEXTURE_SIZE


def sample(unit: int, coords: Sequence[float], env: ExecEnv) -> tuple:
    """Procedural texture lookup: a hash of (sampler seed, unit, quantised coords)."""
    tx, ty = _texel(coords[0]), _texel(coords[1])
    return tuple(unit_f32(derive(env.sampler_seed, unit, tx, ty, lane)) for lane in range(4))


def canonical_hash(outputs: Mapping[str, Sequence[float]], slots: Optional[Sequence[str]] = None) -> int:
    """FNV-1a-64 over canonicalised lane bytes, slots in name order."""
    h = FNV_OFFSET
    names = sorted(outputs if slots is None else slots)
    for name in names:
        for lane in outputs[name]:
            b = canonical_bits(lane)
            for _ in range(4):
                h = ((h ^ (b & 0xFF)) * FNV_PRIME) & _MASK64
                b >>= 8
    return h
