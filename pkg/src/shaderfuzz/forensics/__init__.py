"""Blob version identification and firmware update-delay analytics."""

from .delay import (CATALOG_FIELDS, CatalogError, DelayReport, DelaySummary, FirmwareRecord,
                    InsufficientData, aggregate_delays, estimate_delay, load_catalog)
from .elf import BuildId, ElfFile, MalformedElf, NotFound, extract_build_id, extract_strings
from .fingerprint import DEFAULT_THRESHOLD, FingerprintDb, NoMatch, fingerprint_match, scores
from .versions import (ArmRp, BlobVersion, BuildIdOnly, FingerprintMatch, Incomparable, LlvmVersion,
                       NoVersionString, ParsedVersion, QualcommInternal, parse_version,
                       parse_version_detail, version_from_text)

__all__ = [
    "ArmRp", "BlobVersion", "BuildId", "BuildIdOnly", "CATALOG_FIELDS", "CatalogError",
    "DEFAULT_THRESHOLD", "DelayReport", "DelaySummary", "ElfFile", "FingerprintDb",
    "FingerprintMatch", "FirmwareRecord", "Incomparable", "InsufficientData", "LlvmVersion",
    "MalformedElf", "NoMatch", "NoVersionString", "NotFound", "ParsedVersion", "QualcommInternal",
    "aggregate_delays", "estimate_delay", "extract_build_id", "extract_strings", "fingerprint_match",
    "load_catalog", "parse_version", "parse_version_detail", "scores", "version_from_text",
]
