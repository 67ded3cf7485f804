"""External compiler adapter: shader text on stdin, textual IR on stdout."""

from __future__ import annotations

import re
import shlex
import subprocess
from dataclasses import dataclass
from typing import Optional

from ..ir.text import IrParseError, parse_module
from ..ir.verify import VerifyError, verify
from .classify import ADAPTER_CRASH, ADAPTER_TIMEOUT, COMPLETED, CompileOutcome


class AdapterProtocolError(Exception):
    pass


class AdapterSpawnError(Exception):
    pass


class LocalizationUnavailable(Exception):
    pass


@dataclass(frozen=True)
class AdapterConfig:
    command: tuple
    timeout: float = 10.0
    # "native": mix(origin, unused, c) as generated by this tool; "glsl": swap the first two
    # arguments so a GLSL compiler computes the same value
    mix_order: str = "native"

    def __post_init__(self):
        cmd = self.command
        if isinstance(cmd, str):
            cmd = tuple(shlex.split(cmd))
        object.__setattr__(self, "command", tuple(cmd))
        if not self.command:
            raise ValueError("adapter command is empty")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.mix_order not in ("native", "glsl"):
            raise ValueError(f"unknown mix order {self.mix_order!r}")

    def to_json(self) -> dict:
        return {"command": list(self.command), "timeout": self.timeout, "mix_order": self.mix_order}


_MIX = re.compile(r"\bmix\(")


def _split_args(text: str, start: int):
    """Top-level argument spans of the call whose '(' sits at ``start``."""
    depth, spans, begin = 0, [], start + 1
    for k in range(start, len(text)):
        c = text[k]
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth == 0:
                spans.append((begin, k))
                return spans, k
        elif c == "," and depth == 1:
            spans.append((begin, k))
            begin = k + 1
    raise ValueError("unbalanced parentheses")


def swap_mix_arguments(text: str) -> str:
    """Rewrite every ``mix(a, b, c)`` as ``mix(b, a, c)``, innermost calls included."""
    m = _MIX.search(text)
    if m is None:
        return text
    open_at = m.end() - 1
    spans, close = _split_args(text, open_at)
    if len(spans) != 3:
        head = text[:close + 1]
        return head + swap_mix_arguments(text[close + 1:])
    args = [swap_mix_arguments(text[a:b].strip()) for a, b in spans]
    rewritten = f"mix({args[1]}, {args[0]}, {args[2]})"
    return text[:m.start()] + rewritten + swap_mix_arguments(text[close + 1:])


def adapter_compile(text: str, cfg: AdapterConfig) -> CompileOutcome:
    if cfg.mix_order == "glsl":
        text = swap_mix_arguments(text)
    try:
        proc = subprocess.run(list(cfg.command), input=text.encode(), capture_output=True,
                              timeout=cfg.timeout, check=False)
    except subprocess.TimeoutExpired:
        return CompileOutcome(ADAPTER_TIMEOUT, detail=f"timeout after {cfg.timeout}s")
    except OSError as e:
        raise AdapterSpawnError(f"cannot run {cfg.command[0]!r}: {e}") from e
    if proc.returncode != 0:
        if proc.returncode < 0:
            detail = f"killed by signal {-proc.returncode}"
        else:
            detail = f"exit status {proc.returncode}"
        err = proc.stderr.decode(errors="replace").strip().splitlines()
        if err:
            detail += f": {err[-1]}"
        return CompileOutcome(ADAPTER_CRASH, detail=detail)
    try:
        m = parse_module(proc.stdout.decode())
        verify(m)
    except (IrParseError, VerifyError, UnicodeDecodeError) as e:
        raise AdapterProtocolError(f"adapter output is not valid IR: {e}") from e
    return CompileOutcome(COMPLETED, ir=m)


def stub_command(*args: str, python: Optional[str] = None) -> tuple:
    import sys

    return (python or sys.executable, "-m", "shaderfuzz.harness.stub_adapter", *args)
