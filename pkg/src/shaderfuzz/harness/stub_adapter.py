"""Bundled adapter stub: lowers stdin through the in-repo front end and pipeline.

Modes exercise the protocol's failure paths: ``sleep`` outlasts any timeout,
``signal`` dies by SIGSEGV, ``exit`` returns status 3, ``garbage`` prints
text that is not IR.
"""

from __future__ import annotations

import argparse
import os
import signal
import sys
import time

from ..ir.lower import lower
from ..ir.text import print_module
from ..opt.pipeline import PipelineConfig, run_pipeline
from ..shader_lang.checker import typecheck
from ..shader_lang.parser import parse_text
from .adapter import swap_mix_arguments


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="stub_adapter")
    ap.add_argument("--mode", choices=["identity", "optimize", "sleep", "signal", "exit", "garbage"],
                    default="optimize")
    ap.add_argument("--mix-order", choices=["native", "glsl"], default="native")
    ap.add_argument("--bug", action="append", default=[])
    args = ap.parse_args(argv)
    text = sys.stdin.read()
    if args.mode == "sleep":
        time.sleep(3600)
    if args.mode == "signal":
        os.kill(os.getpid(), signal.SIGSEGV)
    if args.mode == "exit":
        print("stub: simulated compiler error", file=sys.stderr)
        return 3
    if args.mode == "garbage":
        sys.stdout.write("this is not IR\n")
        return 0
    if args.mix_order == "glsl":
        # a GLSL compiler reads mix(a, b, t) as a*(1-t) + b*t: undo the caller's swap
        text = swap_mix_arguments(text)
    module = lower(typecheck(parse_text(text)), "adapter")
    if args.mode == "optimize":
        r = run_pipeline(module, PipelineConfig(injected_bugs=frozenset(args.bug)))
        if r.status == "InternalFault":
            print(f"stub: internal fault in {r.fault_pass}", file=sys.stderr)
            return 70
        if r.status != "Completed":
            time.sleep(3600)  # a stalled compiler never answers
        module = r.ir
    sys.stdout.write(print_module(module))
    return 0


if __name__ == "__main__":
    sys.exit(main())
