"""Campaign driver: generate, compile, execute, classify, minimize, localize."""

from __future__ import annotations

import hashlib
import json
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from ..ir.lower import lower
from ..metamorph import DonorContext, GenerationExhausted, VariantRecipe, generate_variant
from ..opt.bugs import BugId
from ..opt.pipeline import PipelineConfig, executable, run_pipeline
from ..rng import derive
from ..runtime.env import ExecEnv, ExecResult
from ..runtime.executor import execute
from ..shader_lang.interp import interpret
from .adapter import AdapterConfig, adapter_compile
from .classify import COMPLETED, AnomalyKind, CompileOutcome, classify_result, hash_text
from .corpus import CorpusEntry, CorpusError, load_corpus
from .localize import Localization, localize
from .reduce import minimize


@dataclass(frozen=True)
class CampaignConfig:
    manifest: str
    variants_per_reference: int = 200
    depth_range: tuple = (1, 8)
    seed: int = 0
    pipeline: PipelineConfig = PipelineConfig()
    adapter: Optional[AdapterConfig] = None
    timeout: float = 10.0
    parallelism: int = 1
    references: Optional[tuple] = None  # subset of corpus names, default all
    minimize: bool = True
    localize: bool = True
    oracle_check: bool = True
    step_budget: int = 1_000_000

    def __post_init__(self):
        if self.variants_per_reference < 1:
            raise ValueError("variants_per_reference must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        lo, hi = self.depth_range
        if not 1 <= lo <= hi <= 32:
            raise ValueError("depth_range must satisfy 1 <= lo <= hi <= 32")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.references is not None:
            object.__setattr__(self, "references", tuple(self.references))

    def to_json(self) -> dict:
        return {
            "manifest": self.manifest,
            "variants_per_reference": self.variants_per_reference,
            "depth_range": list(self.depth_range),
            "seed": self.seed,
            "pipeline": self.pipeline.to_json(),
            "adapter": None if self.adapter is None else self.adapter.to_json(),
            "references": None if self.references is None else list(self.references),
        }


@dataclass
class AnomalyReport:
    kind: AnomalyKind
    reference_name: str
    recipe: VariantRecipe
    minimized_recipe: Optional[VariantRecipe]
    localization: Localization
    hashes: tuple  # (reference, variant)
    injection_set: tuple
    detail: Optional[str] = None

    @property
    def seed(self) -> int:
        return self.recipe.seed

    def sort_key(self) -> tuple:
        return (self.reference_name, self.recipe.seed)

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "reference_name": self.reference_name,
            "seed": self.recipe.seed,
            "recipe": self.recipe.to_json(),
            "minimized_recipe": None if self.minimized_recipe is None else self.minimized_recipe.to_json(),
            "localization": self.localization.to_json(),
            "hashes": {"reference": self.hashes[0], "variant": self.hashes[1]},
            "injection_set": list(self.injection_set),
            "detail": self.detail,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


@dataclass
class CampaignStats:
    processed: int = 0
    anomalies: dict = field(default_factory=dict)  # kind -> count
    wall_time: float = 0.0
    generation_failures: int = 0
    oracle_checked: int = 0
    oracle_violations: list = field(default_factory=list)  # (reference, seed)
    references: int = 0

    @property
    def throughput(self) -> float:
        return self.processed / self.wall_time if self.wall_time > 0 else 0.0

    def to_json(self) -> dict:
        return {
            "processed": self.processed,
            "anomalies": dict(sorted(self.anomalies.items())),
            "throughput": round(self.throughput, 3),
            "wall_time": round(self.wall_time, 3),
            "generation_failures": self.generation_failures,
            "oracle_checked": self.oracle_checked,
            "oracle_violations": [list(v) for v in self.oracle_violations],
            "references": self.references,
        }


@dataclass
class CampaignResult:
    reports: list
    stats: CampaignStats

    @property
    def exit_code(self) -> int:
        return 2 if self.reports else 0


# --- per-reference context --------------------------------------------------------------------


def _name_key(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "little")


def variant_seed(campaign_seed: int, reference: str, index: int) -> int:
    return derive(campaign_seed, _name_key(reference), index)


class Engine:
    """Everything a worker needs; built once per process."""

    def __init__(self, cfg: CampaignConfig, entries: Optional[list] = None):
        self.cfg = cfg
        self.entries = entries if entries is not None else load_corpus(cfg.manifest)
        self.by_name = {e.name: e for e in self.entries}
        self.ctx = DonorContext({e.name: e.ast for e in self.entries})
        self.refs = {}
        self.bugs = tuple(sorted(b.value for b in cfg.pipeline.injected_bugs))

    def selected(self) -> list:
        if self.cfg.references is None:
            return [e.name for e in self.entries]
        missing = [n for n in self.cfg.references if n not in self.by_name]
        if missing:
            raise CorpusError(f"unknown references: {', '.join(missing)}")
        return list(self.cfg.references)

    def compile(self, ast, text: Optional[str] = None, name: str = "shader") -> CompileOutcome:
        if self.cfg.adapter is not None:
            from ..shader_lang.printer import pretty_print

            return adapter_compile(text if text is not None else pretty_print(ast), self.cfg.adapter)
        r = run_pipeline(lower(ast, name), self.cfg.pipeline)
        return CompileOutcome(r.status, r.ir if r.completed else None, r.fault_pass, r.detail, r.iterations)

    def reference_ir(self, name: str):
        if name not in self.refs:
            e = self.by_name[name]
            out = self.compile(e.ast, e.text, name)
            if not out.completed:
                raise CorpusError(f"reference {name} failed to compile: {out.status} {out.detail or ''}".strip())
            self.refs[name] = executable(out.ir)
        return self.refs[name]

    def env(self, seed: int) -> ExecEnv:
        return ExecEnv(input_seed=seed, sampler_seed=seed, step_budget=self.cfg.step_budget)

    def reference_exec(self, name: str, env: ExecEnv) -> ExecResult:
        e = self.by_name[name]
        r = execute(self.reference_ir(name), env, e.outputs)
        if not r.ok:
            raise CorpusError(f"reference {name} does not execute cleanly: {r.status} {r.reason or ''}".strip())
        return r

    def run_variant(self, variant, name: str, env: ExecEnv, ref_exec: ExecResult):
        out = self.compile(variant.ast, variant.text, name)
        var_exec = None
        if out.status == COMPLETED:
            var_exec = execute(executable(out.ir), env, self.by_name[name].outputs)
        return out, var_exec, classify_result(ref_exec, out.status, var_exec)

    def checker(self, name: str, env: ExecEnv, ref_exec: ExecResult):
        def check(variant):
            return self.run_variant(variant, name, env, ref_exec)[2]
        return check

    def unit(self, name: str, index: int) -> dict:
        cfg = self.cfg
        entry: CorpusEntry = self.by_name[name]
        seed = variant_seed(cfg.seed, name, index)
        lo, hi = cfg.depth_range
        depth = lo + derive(seed, 0x44455054) % (hi - lo + 1)
        env = self.env(seed)
        ref_exec = self.reference_exec(name, env)
        res = {"reference": name, "seed": seed, "report": None, "oracle": None, "generated": True}
        try:
            variant = generate_variant(entry.ast, self.ctx, seed, depth, reference_name=name, env=env,
                                       observed=entry.outputs, oracle=cfg.oracle_check)
        except GenerationExhausted:
            res["generated"] = False
            return res
        if cfg.oracle_check:
            ref_interp = interpret(entry.ast, env, entry.outputs)
            res["oracle"] = variant.oracle.output_hash == ref_interp.output_hash and \
                variant.oracle.status == ref_interp.status
        out, var_exec, kind = self.run_variant(variant, name, env, ref_exec)
        if kind is not None:
            res["report"] = self.report(entry, variant, kind, out, var_exec, env, ref_exec).dumps()
        return res

    def report(self, entry, variant, kind, out, var_exec, env, ref_exec) -> AnomalyReport:
        cfg = self.cfg
        minimized = None
        target = variant
        if cfg.minimize:
            minimized = minimize(entry.ast, self.ctx, variant.recipe, kind, self.checker(entry.name, env, ref_exec))
            if minimized.chain != variant.recipe.chain:
                from ..metamorph import replay_recipe

                target = replay_recipe(entry.ast, self.ctx, minimized)
        loc = Localization()
        if cfg.localize:
            if cfg.adapter is not None:
                loc = Localization(unavailable="adapter runs carry no pass trace")
            else:
                t_out, t_exec = out, var_exec
                if target is not variant:
                    t_out, t_exec, _ = self.run_variant(target, entry.name, env, ref_exec)
                loc = localize(lower(target.ast, entry.name), kind, cfg.pipeline, env, entry.outputs,
                               ref_exec, t_exec, t_out.fault_pass)
        detail = out.detail
        if out.status != COMPLETED:
            detail = f"{out.status}: {detail}" if detail else out.status
        elif var_exec is not None and not var_exec.ok:
            detail = f"variant {var_exec.status}" + (f" ({var_exec.reason})" if var_exec.reason else "")
        return AnomalyReport(kind, entry.name, variant.recipe, minimized, loc,
                             (hash_text(ref_exec), hash_text(var_exec)), self.bugs, detail)


# --- process pool plumbing ---------------------------------------------------------------------

_ENGINE: Optional[Engine] = None


def _init_worker(cfg: CampaignConfig) -> None:
    global _ENGINE
    _ENGINE = Engine(cfg)


def _run_chunk(units: list) -> list:
    return [_ENGINE.unit(name, k) for name, k in units]


def _chunks(units: list, size: int) -> list:
    return [units[k:k + size] for k in range(0, len(units), size)]


def run_campaign(cfg: CampaignConfig, progress=None) -> CampaignResult:
    t0 = time.perf_counter()
    engine = Engine(cfg)
    names = engine.selected()
    for n in names:
        engine.reference_ir(n)  # surface CorpusError before any work
    units = [(n, k) for n in names for k in range(cfg.variants_per_reference)]
    results = []
    if cfg.parallelism == 1:
        for k, (n, i) in enumerate(units):
            results.append(engine.unit(n, i))
            if progress is not None:
                progress(k + 1, len(units))
    else:
        with ProcessPoolExecutor(max_workers=cfg.parallelism, initializer=_init_worker,
                                 initargs=(cfg,)) as pool:
            done = 0
            for chunk in pool.map(_run_chunk, _chunks(units, 25)):
                results.extend(chunk)
                done += len(chunk)
                if progress is not None:
                    progress(done, len(units))
    stats = CampaignStats(references=len(names))
    reports = []
    kinds = Counter()
    for r in results:
        if not r["generated"]:
            stats.generation_failures += 1
            continue
        stats.processed += 1
        if r["oracle"] is not None:
            stats.oracle_checked += 1
            if not r["oracle"]:
                stats.oracle_violations.append((r["reference"], r["seed"]))
        if r["report"] is not None:
            rep = r["report"]
            reports.append(rep)
            kinds[json.loads(rep)["kind"]] += 1
    reports.sort(key=lambda s: (json.loads(s)["reference_name"], json.loads(s)["seed"]))
    stats.anomalies = {k.value: kinds.get(k.value, 0) for k in AnomalyKind}
    stats.wall_time = time.perf_counter() - t0
    return CampaignResult([report_from_json(json.loads(s)) for s in reports], stats)


def report_from_json(d: dict) -> AnomalyReport:
    from ..ir.ddg import DivergenceSummary

    loc = d["localization"]
    summ = loc.get("ddg_summary")
    if summ is not None:
        summ = DivergenceSummary(summ["slot"], summ["unmatched_variant"], summ["unmatched_reference"],
                                 summ["undef_sites"], [tuple(p) for p in summ["opcode_pairs"]])
    return AnomalyReport(
        AnomalyKind(d["kind"]), d["reference_name"], VariantRecipe.from_json(d["recipe"]),
        None if d["minimized_recipe"] is None else VariantRecipe.from_json(d["minimized_recipe"]),
        Localization(loc.get("faulting_pass"), summ, loc.get("unavailable")),
        (d["hashes"]["reference"], d["hashes"]["variant"]), tuple(d["injection_set"]), d.get("detail"))


def write_reports(path: str, reports: list) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in sorted(reports, key=AnomalyReport.sort_key):
            f.write(r.dumps() + "\n")


def read_reports(path: str) -> list:
    with open(path, encoding="utf-8") as f:
        return [report_from_json(json.loads(line)) for line in f if line.strip()]


__all__ = ["AnomalyReport", "CampaignConfig", "CampaignResult", "CampaignStats", "Engine", "BugId",
           "read_reports", "report_from_json", "run_campaign", "variant_seed", "write_reports"]
