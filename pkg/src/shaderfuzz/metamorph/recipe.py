"""Transform kinds, recipes and their JSON form."""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field

from ..shader_lang import ast as A
from ..shader_lang.printer import pretty_print


class TransformKind(str, enum.Enum):
    MixWrap = "MixWrap"
    IfToSwitch = "IfToSwitch"
    ForToWhile = "ForToWhile"
    WhileToFor = "WhileToFor"
    SingleIterationLoopWrap = "SingleIterationLoopWrap"
    LoopUnroll = "LoopUnroll"
    LoopSplit = "LoopSplit"
    CodeDonation = "CodeDonation"


class NotApplicable(Exception):
    pass


class NoDonatableRegion(Exception):
    pass


class GenerationExhausted(Exception):
    def __init__(self, reference: str, seed: int, attempts: int, last: str = ""):
        super().__init__(f"{reference}: seed {seed} rejected {attempts} times ({last})")
        self.reference = reference
        self.seed = seed
        self.attempts = attempts


class RecipeMismatch(Exception):
    pass


def content_hash(shader: A.Shader) -> str:
    """Hash of the canonical pretty-printed text, so formatting edits do not matter."""
    return hashlib.sha256(pretty_print(shader).encode()).hexdigest()[:16]


@dataclass
class Step:
    kind: TransformKind
    target: int  # stable node id, see astutil.IdAlloc
    uid: int  # origin index of the step; nodes it creates are numbered from it
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "target": self.target, "uid": self.uid, "params": self.params}

    @classmethod
    def from_json(cls, d: dict) -> "Step":
        return cls(TransformKind(d["kind"]), int(d["target"]), int(d["uid"]), dict(d.get("params", {})))


@dataclass
class VariantRecipe:
    reference: str
    seed: int
    chain: list  # of Step
    reference_hash: str = ""
    donor_hashes: dict = field(default_factory=dict)  # donor name -> content hash
    attempt: int = 0

    def __post_init__(self):
        if not (0 <= self.seed < 1 << 64):
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def donor_names(self) -> list:
        return sorted(self.donor_hashes)

    @property
    def depth(self) -> int:
        return len(self.chain)

    def kinds(self) -> list:
        return [s.kind for s in self.chain]

    def with_chain(self, chain: list) -> "VariantRecipe":
        donors = {s.params["donor"] for s in chain if s.kind == TransformKind.CodeDonation}
        return VariantRecipe(self.reference, self.seed, list(chain), self.reference_hash,
                             {k: v for k, v in self.donor_hashes.items() if k in donors}, self.attempt)

    def to_json(self) -> dict:
        return {
            "reference": self.reference,
            "seed": self.seed,
            "attempt": self.attempt,
            "reference_hash": self.reference_hash,
            "donor_hashes": dict(sorted(self.donor_hashes.items())),
            "chain": [s.to_json() for s in self.chain],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, d: dict) -> "VariantRecipe":
        return cls(d["reference"], int(d["seed"]), [Step.from_json(s) for s in d["chain"]],
                   d.get("reference_hash", ""), dict(d.get("donor_hashes", {})), int(d.get("attempt", 0)))

    @classmethod
    def loads(cls, line: str) -> "VariantRecipe":
        return cls.from_json(json.loads(line))
