from .bugs import DESIGNATED_KIND, HOST_PASS, BugId, InternalFault
from .half import half_promote
from .loops import loop_split, loop_unroll
from .passes import cfg_simplify, const_fold, dce, inst_combine, peephole
from .pipeline import (DEFAULT_PASSES, PassId, PassTrace, PipelineConfig, PipelineResult, Snapshot,
                       SnapshotUnparseable, executable, first_divergent_snapshot, run_pipeline)
