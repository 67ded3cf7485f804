"""Firmware update-delay estimation over a catalog of firmware records."""

from __future__ import annotations

import csv
import datetime as dt
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .versions import BlobVersion, BuildIdOnly, version_from_text

CATALOG_FIELDS = ("vendor", "device", "gpu_model", "release_date", "blob_build_id", "blob_version")


class InsufficientData(LookupError):
    pass


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class FirmwareRecord:
    vendor: str
    device: str
    gpu_model: str
    release_date: dt.date
    blob_build_id: str
    blob_version: BlobVersion

    def __post_init__(self):
        if not self.gpu_model:
            raise ValueError("gpu_model must be non-empty")
        if isinstance(self.release_date, str):
            object.__setattr__(self, "release_date", dt.date.fromisoformat(self.release_date))
        object.__setattr__(self, "blob_build_id", self.blob_build_id.lower())

    def to_json(self) -> dict:
        return {"vendor": self.vendor, "device": self.device, "gpu_model": self.gpu_model,
                "release_date": self.release_date.isoformat(), "blob_build_id": self.blob_build_id,
                "blob_version": str(self.blob_version)}


@dataclass(frozen=True)
class DelayReport:
    target: FirmwareRecord
    r_o: dt.date
    v_l: BlobVersion
    r_l: dt.date
    delay_days: int
    outdated: bool

    @property
    def r_f(self) -> dt.date:
        return self.target.release_date

    @property
    def v_o(self) -> BlobVersion:
        return self.target.blob_version

    def to_json(self) -> dict:
        return {"target": self.target.to_json(), "r_o": self.r_o.isoformat(), "v_o": str(self.v_o),
                "v_l": str(self.v_l), "r_l": self.r_l.isoformat(),
                "delay_days": self.delay_days, "outdated": self.outdated}


def estimate_delay(catalog, target: FirmwareRecord) -> DelayReport:
    """Delay between the release of the latest available blob and the shipped one.

    r_o is the first appearance of the target's blob (by build-id). v_l is the
    newest version seen for the same GPU in firmware released before the target,
    or the target's own version if that is newer. r_l is the first appearance of
    v_l on that GPU.
    """
    v_o = target.blob_version
    if isinstance(v_o, BuildIdOnly):
        raise InsufficientData("target blob has no orderable version")
    same_blob = [r.release_date for r in catalog if r.blob_build_id == target.blob_build_id]
    r_o = min(same_blob + [target.release_date])
    gpu = [r for r in catalog if r.gpu_model == target.gpu_model]
    candidates = [r for r in gpu if r.release_date < target.release_date]
    if not candidates:
        raise InsufficientData(f"no earlier firmware for GPU {target.gpu_model}")
    for r in candidates:
        if not v_o.comparable(r.blob_version):
            raise InsufficientData(f"{v_o} and {r.blob_version} are not comparable")
    v_l = v_o
    for r in candidates:
        if r.blob_version > v_l:
            v_l = r.blob_version
    r_l = min(r.release_date for r in gpu + [target] if r.blob_version.same(v_l))
    if v_l.same(v_o):
        return DelayReport(target, r_o, v_o, r_l, 0, False)
    return DelayReport(target, r_o, v_l, r_l, max(0, (r_l - r_o).days), True)


@dataclass
class DelaySummary:
    reports: list
    skipped: int
    fraction_outdated: Optional[float]
    median_delay_days: Optional[float]
    max_delay_days: Optional[int]
    per_vendor: dict

    def to_json(self) -> dict:
        return {"records": len(self.reports) + self.skipped, "analyzed": len(self.reports),
                "skipped": self.skipped, "fraction_outdated": self.fraction_outdated,
                "median_delay_days": self.median_delay_days, "max_delay_days": self.max_delay_days,
                "per_vendor": self.per_vendor}


def _stats(reports) -> dict:
    late = [r.delay_days for r in reports if r.outdated]
    return {
        "analyzed": len(reports),
        "outdated": len(late),
        "fraction_outdated": len(late) / len(reports) if reports else None,
        "median_delay_days": statistics.median(late) if late else None,
        "max_delay_days": max(late) if late else None,
    }


def aggregate_delays(catalog) -> DelaySummary:
    """Run estimate_delay for every record; records without enough data are skipped."""
    reports, skipped = [], 0
    for rec in catalog:
        try:
            reports.append(estimate_delay(catalog, rec))
        except InsufficientData:
            skipped += 1
    overall = _stats(reports)
    vendors = sorted({r.target.vendor for r in reports})
    per_vendor = {v: _stats([r for r in reports if r.target.vendor == v]) for v in vendors}
    return DelaySummary(reports, skipped, overall["fraction_outdated"], overall["median_delay_days"],
                        overall["max_delay_days"], per_vendor)


def load_catalog(path) -> list:
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CATALOG_FIELDS:
            raise CatalogError(f"catalog header must be {','.join(CATALOG_FIELDS)}")
        out = []
        for line, row in enumerate(reader, start=2):
            try:
                out.append(FirmwareRecord(row["vendor"], row["device"], row["gpu_model"],
                                          dt.date.fromisoformat(row["release_date"]),
                                          row["blob_build_id"], version_from_text(row["blob_version"])))
            except (ValueError, TypeError) as e:
                raise CatalogError(f"{path}:{line}: {e}") from None
    return out
