#!/usr/bin/env python3
"""Run one campaign per injected bug and tabulate what each one finds.

For every bug: report counts by kind, the faulting pass named by localization,
and the distribution of minimized recipe lengths.
"""

from __future__ import annotations

import argparse
import collections
import json
import time

from shaderfuzz.harness import CampaignConfig, default_manifest, run_campaign
from shaderfuzz.opt import BugId, PipelineConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--variants", type=int, default=200, help="variants per reference")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--bug", action="append", choices=[b.value for b in BugId], help="default: all")
    ap.add_argument("--json", action="store_true", help="one JSON object per bug instead of a table")
    args = ap.parse_args()
    total = 0.0
    for bug in args.bug or [b.value for b in BugId]:
        cfg = CampaignConfig(default_manifest(), args.variants, seed=args.seed, parallelism=args.threads,
                             pipeline=PipelineConfig(injected_bugs=frozenset({bug})), oracle_check=False)
        t0 = time.perf_counter()
        res = run_campaign(cfg)
        secs = time.perf_counter() - t0
        total += secs
        kinds = collections.Counter(r.kind.value for r in res.reports)
        passes = collections.Counter(str(r.localization.faulting_pass) for r in res.reports)
        lengths = collections.Counter(len(r.minimized_recipe.chain) for r in res.reports if r.minimized_recipe)
        row = {"bug": bug, "processed": res.stats.processed, "kinds": dict(kinds), "faulting_pass": dict(passes),
               "minimized_lengths": dict(sorted(lengths.items())), "seconds": round(secs, 1)}
        if args.json:
            print(json.dumps(row, sort_keys=True))
        else:
            print(f"{bug:30s} {dict(kinds)!s:40s} pass={dict(passes)} lengths={row['minimized_lengths']} "
                  f"{secs:.1f}s", flush=True)
    if not args.json:
        print(f"total {total:.1f}s")


if __name__ == "__main__":
    main()
