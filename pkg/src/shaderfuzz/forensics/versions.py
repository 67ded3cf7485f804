"""Blob version schemes and version-string recognition."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional


class NoVersionString(LookupError):
    pass


class Incomparable(TypeError):
    pass


@dataclass(frozen=True)
class BlobVersion:
    """Base for the version schemes. Ordering exists only inside one scheme."""

    scheme = "?"

    def key(self):
        raise Incomparable(f"{self.scheme} versions have no order")

    def comparable(self, other: "BlobVersion") -> bool:
        if type(self) is not type(other):
            return False
        try:
            self.key()
        except Incomparable:
            return False
        return True

    def _check(self, other):
        if not self.comparable(other):
            raise Incomparable(f"cannot order {self} against {other}")

    def __lt__(self, other):
        self._check(other)
        return self.key() < other.key()

    def __le__(self, other):
        self._check(other)
        return self.key() <= other.key()

    def __gt__(self, other):
        self._check(other)
        return self.key() > other.key()

    def __ge__(self, other):
        self._check(other)
        return self.key() >= other.key()

    def same(self, other: "BlobVersion") -> bool:
        """Version identity, with 3-component Qualcomm versions padded to 4."""
        if type(self) is not type(other):
            return False
        if self.comparable(other):
            return self.key() == other.key()
        return self == other


@dataclass(frozen=True)
class QualcommInternal(BlobVersion):
    components: tuple

    scheme = "qc"

    def __post_init__(self):
        comps = tuple(int(c) for c in self.components)
        if len(comps) not in (3, 4) or any(c < 0 for c in comps):
            raise ValueError(f"Qualcomm version needs 3 or 4 non-negative components, got {comps}")
        object.__setattr__(self, "components", comps)

    def key(self):
        return self.components + (0,) * (4 - len(self.components))

    def __str__(self):
        return "qc:" + ".".join(str(c) for c in self.components)


@dataclass(frozen=True)
class ArmRp(BlobVersion):
    major: int
    patch: int

    scheme = "arm"

    def key(self):
        return (self.major, self.patch)

    def __str__(self):
        return f"arm:r{self.major}p{self.patch}"


@dataclass(frozen=True)
class LlvmVersion(BlobVersion):
    major: int
    minor: int
    patch: int
    commit: Optional[str] = None

    scheme = "llvm"

    def key(self):
        # the commit hash identifies a build, it does not order releases
        return (self.major, self.minor, self.patch)

    def __str__(self):
        base = f"llvm:{self.major}.{self.minor}.{self.patch}"
        return f"{base}.{self.commit}" if self.commit else base


@dataclass(frozen=True)
class FingerprintMatch(BlobVersion):
    label: str
    score: Fraction = field(default=Fraction(1), compare=False)
    tie: bool = field(default=False, compare=False)

    scheme = "fp"

    def __str__(self):
        return f"fp:{self.label}"


@dataclass(frozen=True)
class BuildIdOnly(BlobVersion):
    build_id: str = ""

    scheme = "bid"

    def __str__(self):
        return f"bid:{self.build_id}" if self.build_id else "bid"


QC_RE = re.compile(r"(?<![A-Za-z0-9.])EV?(\d+(?:\.\d+){2,3})(?![0-9]|\.\d)")
ARM_RE = re.compile(r"(?<![A-Za-z0-9])r(\d+)p(\d+)(?![0-9])")
LLVM_NAMED_RE = re.compile(r"LLVM\D{0,32}?(\d+)\.(\d+)\.(\d+)(?![0-9])")
LLVM_COMMIT_RE = re.compile(r"(?<![0-9.])(\d+)\.(\d+)\.(\d+)\.([0-9a-f]{7,40})(?![0-9A-Za-z])")


def _first(strings, fn):
    for s in strings:
        v = fn(s)
        if v is not None:
            return v
    return None


def _qc(s):
    m = QC_RE.search(s)
    return QualcommInternal(tuple(int(x) for x in m.group(1).split("."))) if m else None


def _arm(s):
    m = ARM_RE.search(s)
    return ArmRp(int(m.group(1)), int(m.group(2))) if m else None


def _llvm(s):
    m = LLVM_COMMIT_RE.search(s)
    if m:
        return LlvmVersion(int(m.group(1)), int(m.group(2)), int(m.group(3)), m.group(4))
    m = LLVM_NAMED_RE.search(s)
    if m:
        return LlvmVersion(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    return None


@dataclass
class ParsedVersion:
    version: BlobVersion
    ambiguous: list  # other schemes that also matched, in precedence order


def parse_version_detail(strings) -> ParsedVersion:
    """Try Qualcomm, then ARM, then LLVM; strings are scanned in sorted order."""
    ordered = sorted(strings)
    hits = [v for v in (_first(ordered, f) for f in (_qc, _arm, _llvm)) if v is not None]
    if not hits:
        raise NoVersionString("no recognizable version string")
    return ParsedVersion(hits[0], hits[1:])


def parse_version(strings) -> BlobVersion:
    return parse_version_detail(strings).version


def format_version(v: BlobVersion) -> str:
    return str(v)


def version_from_text(text: str) -> BlobVersion:
    """Inverse of ``str(version)``: ``qc:31.42.23.11``, ``arm:r32p1``, ``llvm:9.0.0``, ``fp:label``, ``bid``."""
    text = text.strip()
    scheme, _, body = text.partition(":")
    if scheme == "qc":
        parts = body.lstrip("EV").split(".")
        if not all(p.isdigit() for p in parts):
            raise ValueError(f"bad Qualcomm version {text!r}")
        return QualcommInternal(tuple(int(p) for p in parts))
    if scheme == "arm":
        m = re.fullmatch(r"r(\d+)p(\d+)", body)
        if not m:
            raise ValueError(f"bad ARM version {text!r}")
        return ArmRp(int(m.group(1)), int(m.group(2)))
    if scheme == "llvm":
        m = re.fullmatch(r"(\d+)\.(\d+)\.(\d+)(?:\.([0-9A-Za-z]+))?", body)
        if not m:
            raise ValueError(f"bad LLVM version {text!r}")
        return LlvmVersion(int(m.group(1)), int(m.group(2)), int(m.group(3)), m.group(4))
    if scheme == "fp":
        if not body:
            raise ValueError("fingerprint label is empty")
        return FingerprintMatch(body)
    if scheme == "bid":
        return BuildIdOnly(body)
    raise ValueError(f"unknown version scheme in {text!r}")
