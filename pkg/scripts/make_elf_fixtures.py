#!/usr/bin/env python3
"""Build the ELF blob fixtures and record system-tool goldens for them.

Needs gcc, readelf and strings (binutils). The outputs under fixtures/blobs are
committed, so the tests only compare against the recorded goldens.
"""

from __future__ import annotations

import argparse
import json
import re
import struct
import subprocess
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "fixtures" / "blobs"

COMMON = r'''
__attribute__((used)) static const char log0[] = "vkCreateGraphicsPipelines: compile failed";
__attribute__((used)) static const char log1[] = "tab\there ok";
__attribute__((used)) static const char shrt[] = "abc";
__attribute__((used)) static const char multi[] = "line1\nline2xx";
char writable[] = "writable data string";
int entry(int x) { return x * 3 + (int)sizeof(log0); }
'''

BLOBS = {
    # name: (planted version string, extra strings, build-id flag, expected parse)
    "adreno_qc": ("Adreno blob EV031.42.23.11", ["QGL: shader cache hit"], "sha1", "qc:31.42.23.11"),
    "adreno_qc3": ("EV031.35.01", ["QGL: shader cache miss"], "sha1", "qc:31.35.1"),
    "mali_arm": ("Mali r32p1-01eac0", ["mali: job fault"], "sha1", "arm:r32p1"),
    "llvm_commit": ("compiler 10.0.1.f7a8b9c0d1", ["gvn-hoist", "mergeicmps"], "md5", "llvm:10.0.1.f7a8b9c0d1"),
    "no_buildid": ("EV031.42.24.02", [], "none", "qc:31.42.24.2"),
}


def c_source(version: str, extra: list) -> str:
    lines = [COMMON, f'__attribute__((used)) static const char ver[] = "{version}";']
    for k, s in enumerate(extra):
        lines.append(f'__attribute__((used)) static const char extra{k}[] = "{s}";')
    return "\n".join(lines) + "\n"


def build(name: str, version: str, extra: list, build_id: str, work: Path) -> Path:
    src = work / f"{name}.c"
    src.write_text(c_source(version, extra))
    out = OUT / f"{name}.so"
    subprocess.run(["gcc", "-O1", "-shared", "-fPIC", "-s", f"-Wl,--build-id={build_id}",
                    "-ffile-prefix-map=" + str(work) + "=.", "-o", str(out), str(src)], check=True)
    return out


def strip_section_headers(src: Path, dst: Path) -> None:
    """Zero e_shoff/e_shnum/e_shstrndx so only program headers remain."""
    data = bytearray(src.read_bytes())
    struct.pack_into("<Q", data, 0x28, 0)
    struct.pack_into("<HHH", data, 0x3A, 64, 0, 0)
    dst.write_bytes(bytes(data))


def readelf_build_id(path: Path):
    out = subprocess.run(["readelf", "-n", str(path)], capture_output=True, text=True).stdout
    m = re.search(r"Build ID: ([0-9a-f]+)", out)
    return m.group(1) if m else None


def system_strings(path: Path, min_len: int = 4) -> list:
    out = subprocess.run(["strings", "-d", "-n", str(min_len), str(path)],
                         capture_output=True, text=True, check=True).stdout
    return sorted(set(out.split("\n")) - {""})


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.parse_args()
    OUT.mkdir(parents=True, exist_ok=True)
    golden = {}
    with tempfile.TemporaryDirectory() as tmp:
        for name, (version, extra, bid, parsed) in BLOBS.items():
            path = build(name, version, extra, bid, Path(tmp))
            golden[path.name] = {
                "build_id": readelf_build_id(path),
                "strings": system_strings(path),
                "planted": version,
                "version": parsed,
            }
    nosec = OUT / "adreno_qc_nosections.so"
    strip_section_headers(OUT / "adreno_qc.so", nosec)
    # strings scans the whole file when there are no sections, so only the build-id is golden here
    golden[nosec.name] = {"build_id": readelf_build_id(nosec), "strings": None,
                          "planted": BLOBS["adreno_qc"][0], "version": BLOBS["adreno_qc"][3]}
    (OUT / "golden.json").write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n")
    for name, g in sorted(golden.items()):
        print(f"{name:28s} build-id={g['build_id']}")


if __name__ == "__main__":
    main()
