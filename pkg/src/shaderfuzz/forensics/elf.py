"""Minimal ELF64 little-endian reader: section and program headers, notes, strings."""

from __future__ import annotations

import struct
from dataclasses import dataclass

SHT_NOTE = 7
SHT_NOBITS = 8
SHF_ALLOC = 0x2
PT_NOTE = 4
NT_GNU_BUILD_ID = 3

_EHDR = struct.Struct("<16sHHIQQQIHHHHHH")
_SHDR = struct.Struct("<IIQQQQIIQQ")
_PHDR = struct.Struct("<IIQQQQQQ")
_NHDR = struct.Struct("<III")


class MalformedElf(ValueError):
    pass


class NotFound(LookupError):
    pass


@dataclass(frozen=True)
class BuildId:
    raw: bytes

    @property
    def hex(self) -> str:
        return self.raw.hex()

    def __str__(self) -> str:
        return self.hex


@dataclass
class Section:
    name: str
    type: int
    flags: int
    offset: int
    size: int
    align: int


@dataclass
class Segment:
    type: int
    offset: int
    filesz: int
    align: int


class ElfFile:
    def __init__(self, data: bytes):
        self.data = bytes(data)
        if len(self.data) < 64:
            raise MalformedElf(f"file too short for an ELF header ({len(self.data)} bytes)")
        if self.data[:4] != b"\x7fELF":
            raise MalformedElf("bad ELF magic")
        if self.data[4] == 1:
            raise MalformedElf("32-bit ELF is not supported (ELF64 little-endian only)")
        if self.data[4] != 2:
            raise MalformedElf(f"unknown ELF class {self.data[4]}")
        if self.data[5] != 1:
            raise MalformedElf("big-endian ELF is not supported (ELF64 little-endian only)")
        (_, _, _, _, _, self.phoff, self.shoff, _, _, self.phentsize, self.phnum,
         self.shentsize, self.shnum, self.shstrndx) = _EHDR.unpack_from(self.data, 0)
        self.sections = self._read_sections()
        self.segments = self._read_segments()

    def _slice(self, off: int, size: int, what: str) -> bytes:
        if off < 0 or size < 0 or off + size > len(self.data):
            raise MalformedElf(f"{what} at offset {off:#x} size {size:#x} runs past end of file")
        return self.data[off:off + size]

    def _read_sections(self) -> list:
        if self.shoff == 0:
            return []
        if self.shentsize != _SHDR.size:
            raise MalformedElf(f"unexpected section header size {self.shentsize}")
        shnum, strndx = self.shnum, self.shstrndx
        if shnum == 0:  # extended numbering keeps the count in section 0
            shnum = _SHDR.unpack(self._slice(self.shoff, _SHDR.size, "section header 0"))[5]
        raw = []
        for k in range(shnum):
            raw.append(_SHDR.unpack(self._slice(self.shoff + k * _SHDR.size, _SHDR.size, f"section header {k}")))
        if strndx == 0xFFFF and raw:
            strndx = raw[0][6]
        names = b""
        if 0 < strndx < len(raw):
            h = raw[strndx]
            names = self._slice(h[4], h[5], "section name table")
        out = []
        for h in raw:
            name_off = h[0]
            end = names.find(b"\0", name_off)
            name = names[name_off:end if end >= 0 else None].decode("latin-1") if names else ""
            out.append(Section(name, h[1], h[2], h[4], h[5], h[8]))
        return out

    def _read_segments(self) -> list:
        if self.phoff == 0 or self.phnum == 0:
            return []
        if self.phentsize != _PHDR.size:
            raise MalformedElf(f"unexpected program header size {self.phentsize}")
        out = []
        for k in range(self.phnum):
            h = _PHDR.unpack(self._slice(self.phoff + k * _PHDR.size, _PHDR.size, f"program header {k}"))
            out.append(Segment(h[0], h[2], h[5], h[7]))
        return out

    def section_bytes(self, s: Section) -> bytes:
        if s.type == SHT_NOBITS:
            return b""
        return self._slice(s.offset, s.size, f"section {s.name or '?'}")


def iter_notes(blob: bytes, align: int = 4):
    """Yield (name, type, desc) from a note area."""
    align = 8 if align == 8 else 4
    pos = 0
    while pos + _NHDR.size <= len(blob):
        namesz, descsz, ntype = _NHDR.unpack_from(blob, pos)
        name_start = pos + _NHDR.size
        name_end = name_start + namesz
        desc_start = name_end + (-name_end % align)
        desc_end = desc_start + descsz
        if desc_end > len(blob):
            raise MalformedElf("note runs past the end of its section")
        yield blob[name_start:name_end].rstrip(b"\0"), ntype, blob[desc_start:desc_end]
        pos = desc_end + (-desc_end % align)


def extract_build_id(data: bytes) -> BuildId:
    """GNU build-id from note sections, falling back to PT_NOTE segments."""
    elf = ElfFile(data)
    areas = [(elf.section_bytes(s), s.align) for s in elf.sections if s.type == SHT_NOTE]
    if not areas:
        areas = [(elf._slice(p.offset, p.filesz, "note segment"), p.align)
                 for p in elf.segments if p.type == PT_NOTE]
    for blob, align in areas:
        for name, ntype, desc in iter_notes(blob, align):
            if name == b"GNU" and ntype == NT_GNU_BUILD_ID:
                return BuildId(desc)
    raise NotFound("no GNU build-id note")


def _printable(b: int) -> bool:
    return 0x20 <= b < 0x7F or b == 0x09


def printable_runs(blob: bytes, min_len: int = 4) -> list:
    out, start = [], None
    for k, b in enumerate(blob):
        if _printable(b):
            if start is None:
                start = k
        else:
            if start is not None and k - start >= min_len:
                out.append(blob[start:k].decode("ascii"))
            start = None
    if start is not None and len(blob) - start >= min_len:
        out.append(blob[start:].decode("ascii"))
    return out


def extract_strings(data: bytes, min_len: int = 4) -> set:
    """Printable ASCII runs (tab included) in each allocated, file-backed section.

    Runs never span section boundaries. Without section headers the PT_LOAD
    segments are scanned instead.
    """
    if min_len < 1:
        raise ValueError("min_len must be positive")
    elf = ElfFile(data)
    out = set()
    loaded = [s for s in elf.sections if s.flags & SHF_ALLOC and s.type != SHT_NOBITS and s.size]
    if loaded:
        for s in loaded:
            out.update(printable_runs(elf.section_bytes(s), min_len))
    else:
        for p in elf.segments:
            if p.type == 1:  # PT_LOAD
                out.update(printable_runs(elf._slice(p.offset, p.filesz, "load segment"), min_len))
    return out
