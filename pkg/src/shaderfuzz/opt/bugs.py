"""Injectable compiler faults used to self-test the differential harness."""

from __future__ import annotations

import enum


class BugId(str, enum.Enum):
    DceDropsLiveStore = "dce_drops_live_store"
    InstCombineWrongIdentity = "inst_combine_wrong_identity"
    PeepholeNullDeref = "peephole_null_deref"
    UnrollNonterminating = "unroll_nonterminating"

    @classmethod
    def parse(cls, text: str) -> "BugId":
        for b in cls:
            if text in (b.value, b.name):
                return b
        raise ValueError(f"unknown bug id {text!r}; choose from {', '.join(b.value for b in cls)}")


# kind of anomaly each injection is expected to produce
DESIGNATED_KIND = {
    BugId.DceDropsLiveStore: "SemanticDivergence",
    BugId.InstCombineWrongIdentity: "SemanticDivergence",
    BugId.PeepholeNullDeref: "Crash",
    BugId.UnrollNonterminating: "Stall",
}

# pass that hosts each injection
HOST_PASS = {
    BugId.DceDropsLiveStore: "Dce",
    BugId.InstCombineWrongIdentity: "InstCombine",
    BugId.PeepholeNullDeref: "Peephole",
    BugId.UnrollNonterminating: "LoopUnroll",
}


class InternalFault(Exception):
    """A compiler-side fault; the analog of a crash inside the vendor compiler."""

    def __init__(self, pass_name: str, detail: str):
        super().__init__(f"{pass_name}: {detail}")
        self.pass_name = pass_name
        self.detail = detail
