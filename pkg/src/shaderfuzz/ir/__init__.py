from .core import Const, GlobalSlot, Inst, Module, Undef
from .ddg import Ddg, DivergenceSummary, build_ddg, ddg_diff, slice_outputs
from .lower import LoweringUnsupported, lower
from .text import IrParseError, parse_module, print_module
from .verify import VerifyError, verify
