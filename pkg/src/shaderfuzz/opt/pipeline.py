"""Pass manager with fixpoint iteration, pass tracing and fault injection."""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from typing import Optional

from ..ir.core import Module, clone_module
from ..ir.text import IrParseError, parse_module, print_module
from ..runtime.env import ExecEnv
from .bugs import BugId, InternalFault
from .half import half_promote, half_promote_inplace
from .loops import loop_split_inplace, loop_unroll_inplace
from .passes import (cfg_simplify_inplace, const_fold_inplace, dce_inplace, inst_combine_inplace,
                     peephole_inplace)


class PassId(str, enum.Enum):
    HalfPromote = "HalfPromote"
    ConstFold = "ConstFold"
    InstCombine = "InstCombine"
    Dce = "Dce"
    Peephole = "Peephole"
    CfgSimplify = "CfgSimplify"
    LoopUnroll = "LoopUnroll"
    LoopSplit = "LoopSplit"


PASSES = {
    PassId.HalfPromote: half_promote_inplace,
    PassId.ConstFold: const_fold_inplace,
    PassId.InstCombine: inst_combine_inplace,
    PassId.Dce: dce_inplace,
    PassId.Peephole: peephole_inplace,
    PassId.CfgSimplify: cfg_simplify_inplace,
    PassId.LoopUnroll: loop_unroll_inplace,
    PassId.LoopSplit: loop_split_inplace,
}

DEFAULT_PASSES = (PassId.HalfPromote, PassId.ConstFold, PassId.InstCombine, PassId.Dce,
                  PassId.Peephole, PassId.CfgSimplify, PassId.LoopUnroll, PassId.LoopSplit)

_ARITH = {PassId.ConstFold, PassId.InstCombine, PassId.Peephole}


@dataclass(frozen=True)
class PipelineConfig:
    passes: tuple = DEFAULT_PASSES
    fixpoint_budget: int = 64
    trace: bool = False
    injected_bugs: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "passes", tuple(PassId(p) for p in self.passes))
        object.__setattr__(self, "injected_bugs", frozenset(BugId(b) for b in self.injected_bugs))
        if self.fixpoint_budget < 1:
            raise ValueError("fixpoint_budget must be >= 1")
        if PassId.HalfPromote in self.passes:
            first = self.passes.index(PassId.HalfPromote)
            if any(p in _ARITH for p in self.passes[:first]):
                raise ValueError("HalfPromote must run before any arithmetic pass")

    def with_trace(self, on: bool = True) -> "PipelineConfig":
        return PipelineConfig(self.passes, self.fixpoint_budget, on, self.injected_bugs)

    def to_json(self) -> dict:
        return {
            "passes": [p.value for p in self.passes],
            "fixpoint_budget": self.fixpoint_budget,
            "injected_bugs": sorted(b.value for b in self.injected_bugs),
        }


@dataclass
class Snapshot:
    pass_name: str
    iteration: int
    text: str


@dataclass
class PassTrace:
    """IR text after every pass application; index 0 holds the pipeline input."""

    snapshots: list = field(default_factory=list)

    def dump(self, directory: str) -> list:
        os.makedirs(directory, exist_ok=True)
        paths = []
        for k, s in enumerate(self.snapshots):
            p = os.path.join(directory, f"{k:04}_{s.pass_name}.ir")
            with open(p, "w", encoding="utf-8") as f:
                f.write(s.text)
            paths.append(p)
        return paths


@dataclass
class PipelineResult:
    ir: Module
    status: str  # Completed | StallBudgetExceeded | InternalFault
    iterations: int
    trace: Optional[PassTrace] = None
    fault_pass: Optional[str] = None
    detail: Optional[str] = None

    @property
    def completed(self) -> bool:
        return self.status == "Completed"


def run_pipeline(m: Module, cfg: PipelineConfig = PipelineConfig()) -> PipelineResult:
    """Iterate the pass list until a full round changes nothing or the budget runs out."""
    work = clone_module(m)
    trace = PassTrace([Snapshot("Input", 0, print_module(work))]) if cfg.trace else None
    bugs = cfg.injected_bugs
    last_text = None
    for it in range(1, cfg.fixpoint_budget + 1):
        any_change = False
        for pid in cfg.passes:
            try:
                changed = PASSES[pid](work, bugs)
            except InternalFault as f:
                return PipelineResult(work, "InternalFault", it, trace, f.pass_name, f.detail)
            except Exception as e:  # a genuine pass bug is still a compiler crash
                return PipelineResult(work, "InternalFault", it, trace, pid.value, f"{type(e).__name__}: {e}")
            if trace is not None:
                trace.snapshots.append(Snapshot(pid.value, it, print_module(work)))
            any_change |= changed
        if not any_change:
            return PipelineResult(work, "Completed", it, trace)
        if trace is None:
            # passes are pure functions of the module: a round that claims change
            # but leaves the text as it was will repeat until the budget runs out
            text = print_module(work)
            if text == last_text:
                break
            last_text = text
    return PipelineResult(work, "StallBudgetExceeded", cfg.fixpoint_budget, trace)


class SnapshotUnparseable(Exception):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"snapshot {index} does not parse: {cause}")
        self.index = index


def executable(m: Module) -> Module:
    """Module ready for the runtime: f16 promoted if the pipeline left any."""
    return half_promote(m)[0]


def first_divergent_snapshot(trace: PassTrace, env: ExecEnv, observed=None, with_index: bool = False):
    """Name of the first pass whose output executes differently from snapshot 0.

    With ``with_index`` the snapshot index is returned too, ``(None, None)`` if
    nothing diverges. Snapshots identical to their predecessor are not re-run.
    """
    from ..runtime.executor import execute

    if not trace.snapshots:
        raise ValueError("empty trace")
    base = None
    prev_text = None
    for k, snap in enumerate(trace.snapshots):
        if snap.text == prev_text:
            continue
        prev_text = snap.text
        try:
            mod = parse_module(snap.text)
        except IrParseError as e:
            raise SnapshotUnparseable(k, e) from e
        r = execute(executable(mod), env, observed)
        key = (r.status, r.output_hash, r.reason)
        if k == 0:
            base = key
        elif key != base:
            return (snap.pass_name, k) if with_index else snap.pass_name
    return (None, None) if with_index else None
