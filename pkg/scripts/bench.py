#!/usr/bin/env python3
"""Measure end-to-end campaign throughput (variants per second).

Generation, compilation, execution and classification are all included;
minimization and localization only run for anomalies, so a clean pipeline
gives the baseline figure.
"""

from __future__ import annotations

import argparse
import json
import platform

from shaderfuzz.harness import CampaignConfig, default_manifest, run_campaign
from shaderfuzz.opt import PipelineConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--variants", type=int, default=50, help="variants per reference")
    ap.add_argument("--threads", type=int, nargs="+", default=[1], help="parallelism levels to try")
    ap.add_argument("--inject", action="append", default=[], help="bug to enable (repeatable)")
    ap.add_argument("--oracle", action="store_true", help="include the interpreter soundness check")
    args = ap.parse_args()
    for threads in args.threads:
        cfg = CampaignConfig(default_manifest(), args.variants, parallelism=threads, oracle_check=args.oracle,
                             pipeline=PipelineConfig(injected_bugs=frozenset(args.inject)))
        stats = run_campaign(cfg).stats
        print(json.dumps({"threads": threads, "variants": stats.processed, "wall_time": round(stats.wall_time, 2),
                          "throughput": round(stats.throughput, 1), "python": platform.python_version()}))


if __name__ == "__main__":
    main()
