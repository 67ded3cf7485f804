"""Anomaly taxonomy and the decision table mapping outcomes to it.

=====================  ======================  ======================
compile status         variant execution       classification
=====================  ======================  ======================
InternalFault          (not run)               Crash
AdapterCrash           (not run)               Crash
StallBudgetExceeded    (not run)               Stall
AdapterTimeout         (not run)               Stall
Completed              status or hash differs  SemanticDivergence
Completed              status and hash equal   no anomaly
=====================  ======================  ======================

The reference must itself execute cleanly; anything else is a harness error.
A variant that runs out of steps or faults at runtime while the reference
does not counts as a divergence, since its status differs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from ..ir.core import Module
from ..runtime.env import ExecResult


class AnomalyKind(str, enum.Enum):
    Crash = "Crash"
    Stall = "Stall"
    SemanticDivergence = "SemanticDivergence"


# compile statuses
COMPLETED = "Completed"
INTERNAL_FAULT = "InternalFault"
STALL_BUDGET = "StallBudgetExceeded"
ADAPTER_CRASH = "AdapterCrash"
ADAPTER_TIMEOUT = "AdapterTimeout"

_COMPILE_KIND = {
    INTERNAL_FAULT: AnomalyKind.Crash,
    ADAPTER_CRASH: AnomalyKind.Crash,
    STALL_BUDGET: AnomalyKind.Stall,
    ADAPTER_TIMEOUT: AnomalyKind.Stall,
}


@dataclass
class CompileOutcome:
    status: str
    ir: Optional[Module] = None
    fault_pass: Optional[str] = None
    detail: Optional[str] = None
    iterations: int = 0

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED


def classify_result(ref_exec: ExecResult, compile_status: str,
                    var_exec: Optional[ExecResult]) -> Optional[AnomalyKind]:
    """Apply the module decision table; compiler faults take precedence over execution."""
    if not ref_exec.ok:
        raise ValueError(f"reference did not execute cleanly ({ref_exec.status})")
    if compile_status in _COMPILE_KIND:
        return _COMPILE_KIND[compile_status]
    if compile_status != COMPLETED:
        raise ValueError(f"unknown compile status {compile_status!r}")
    if var_exec is None:
        raise ValueError("completed compile needs an execution result")
    if var_exec.status != ref_exec.status or var_exec.output_hash != ref_exec.output_hash:
        return AnomalyKind.SemanticDivergence
    return None


def hash_text(r: Optional[ExecResult]) -> Optional[str]:
    if r is None:
        return None
    if r.output_hash is None:
        return f"{r.status}:{r.reason}" if r.reason else r.status
    return f"{r.output_hash:016x}"
