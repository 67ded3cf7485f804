"""Pass-level localization from the pipeline trace plus a data-dependency diff."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..ir.ddg import DivergenceSummary, build_ddg, ddg_diff, slice_outputs
from ..ir.text import parse_module
from ..opt.pipeline import PipelineConfig, first_divergent_snapshot, run_pipeline
from ..runtime.env import ExecEnv, ExecResult
from .classify import AnomalyKind


@dataclass
class Localization:
    faulting_pass: Optional[str] = None
    ddg_summary: Optional[DivergenceSummary] = None
    unavailable: Optional[str] = None

    def to_json(self) -> dict:
        d = {"faulting_pass": self.faulting_pass,
             "ddg_summary": None if self.ddg_summary is None else self.ddg_summary.to_json()}
        if self.unavailable is not None:
            d["unavailable"] = self.unavailable
        return d


def diverging_slots(ref: ExecResult, var: Optional[ExecResult], observed) -> list:
    if var is None or not var.ok:
        return sorted(observed)
    return sorted(s for s in observed if ref.outputs.get(s) != var.outputs.get(s))


def localize(module, kind: AnomalyKind, cfg: PipelineConfig, env: ExecEnv, observed,
             ref_exec: ExecResult, var_exec: Optional[ExecResult] = None,
             fault_pass: Optional[str] = None) -> Localization:
    """``module`` is the unoptimized lowering of the (minimized) variant."""
    kind = AnomalyKind(kind)
    if kind == AnomalyKind.Crash:
        return Localization(faulting_pass=fault_pass)
    if kind != AnomalyKind.SemanticDivergence:
        return Localization()
    r = run_pipeline(module, cfg.with_trace())
    snaps = r.trace.snapshots
    culprit, index = first_divergent_snapshot(r.trace, env, observed, with_index=True)
    loc = Localization(faulting_pass=culprit)
    slots = diverging_slots(ref_exec, var_exec, observed)
    if index is not None and slots:
        final = r.ir
        before = parse_module(snaps[index - 1].text)
        slot = slots[0]
        loc.ddg_summary = ddg_diff(slice_outputs(final, build_ddg(final))[slot],
                                   slice_outputs(before, build_ddg(before))[slot])
    return loc
