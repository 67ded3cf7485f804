"""String-set fingerprinting of blob versions."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .versions import FingerprintMatch

DEFAULT_THRESHOLD = Fraction(3, 10)


class NoMatch(LookupError):
    pass


@dataclass
class FingerprintDb:
    entries: dict  # label -> frozenset of strings

    def __post_init__(self):
        if not self.entries:
            raise ValueError("fingerprint database is empty")
        clean = {}
        for label, strings in self.entries.items():
            s = frozenset(strings)
            if not s:
                raise ValueError(f"fingerprint {label!r} has no strings")
            clean[str(label)] = s
        self.entries = clean

    @classmethod
    def load(cls, path) -> "FingerprintDb":
        """JSON object mapping label to a list of strings. Duplicate labels are rejected."""
        def no_dupes(pairs):
            seen = {}
            for k, v in pairs:
                if k in seen:
                    raise ValueError(f"duplicate fingerprint label {k!r}")
                seen[k] = v
            return seen

        data = json.loads(Path(path).read_text(), object_pairs_hook=no_dupes)
        if not isinstance(data, dict):
            raise ValueError("fingerprint database must be a JSON object")
        return cls(data)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps({k: sorted(v) for k, v in sorted(self.entries.items())}, indent=2) + "\n")


def scores(strings, db: FingerprintDb) -> dict:
    q = set(strings)
    return {label: Fraction(len(q & s), len(s)) for label, s in db.entries.items()}


def fingerprint_match(strings, db: FingerprintDb, threshold=DEFAULT_THRESHOLD) -> FingerprintMatch:
    threshold = Fraction(threshold).limit_denominator(10**6) if isinstance(threshold, float) else Fraction(threshold)
    sc = scores(strings, db)
    best = max(sc.values())
    if best == 0 or best < threshold:
        raise NoMatch(f"best score {best} below threshold {threshold}")
    labels = sorted(k for k, v in sc.items() if v == best)
    return FingerprintMatch(labels[0], best, len(labels) > 1)
