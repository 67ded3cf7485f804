"""Acceptance criteria 1-9, one test each; the run ends with a PASS/FAIL line per criterion."""

import json
import re
import shutil
import subprocess
import time

import pytest

from shaderfuzz.cli import main
from shaderfuzz.forensics import (aggregate_delays, estimate_delay, extract_build_id, extract_strings,
                                  load_catalog, parse_version)
from shaderfuzz.harness import AnomalyKind, CampaignConfig, Engine, run_campaign
from shaderfuzz.harness.reduce import _try
from shaderfuzz.ir import lower, print_module
from shaderfuzz.metamorph import NotApplicable, TransformKind, mutate_control_flow, replay_recipe
from shaderfuzz.opt import BugId, PipelineConfig, run_pipeline
from shaderfuzz.opt.half import has_half
from shaderfuzz.opt.pipeline import PassId, executable
from shaderfuzz.rng import SplitMix64
from shaderfuzz.runtime import ExecEnv, execute
from shaderfuzz.shader_lang import ast as A
from shaderfuzz.shader_lang.interp import interpret

from conftest import FIXTURES, shader

VARIANTS = 200

DESIGNATED = {
    BugId.DceDropsLiveStore: (AnomalyKind.SemanticDivergence, "Dce"),
    BugId.InstCombineWrongIdentity: (AnomalyKind.SemanticDivergence, "InstCombine"),
    BugId.PeepholeNullDeref: (AnomalyKind.Crash, "Peephole"),
    BugId.UnrollNonterminating: (AnomalyKind.Stall, None),
}


def _detail(record_property, text):
    record_property("detail", text)
    print(text)


@pytest.fixture(scope="module")
def bug_campaigns(manifest):
    out = {}
    for bug in DESIGNATED:
        t0 = time.perf_counter()
        res = run_campaign(CampaignConfig(manifest, VARIANTS, pipeline=PipelineConfig(injected_bugs=frozenset({bug})),
                                          oracle_check=False))
        out[bug] = (res, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="module")
def clean_campaign(manifest):
    t0 = time.perf_counter()
    res = run_campaign(CampaignConfig(manifest, VARIANTS))
    return res, time.perf_counter() - t0


@pytest.mark.acceptance(1, "metamorphic soundness")
def test_criterion_1_metamorphic_soundness(clean_campaign, corpus, record_property):
    res, secs = clean_campaign
    s = res.stats
    _detail(record_property, f"{len(corpus)} references x {VARIANTS} variants, {len(res.reports)} reports, "
                             f"oracle {s.oracle_checked - len(s.oracle_violations)}/{s.processed} equal, {secs:.1f} s")
    assert len(corpus) >= 20
    assert s.processed == len(corpus) * VARIANTS
    assert s.generation_failures == 0
    assert res.reports == []
    assert s.oracle_checked == s.processed and s.oracle_violations == []
    assert secs < 300


@pytest.mark.acceptance(2, "injection detection")
def test_criterion_2_injection_detection(bug_campaigns, record_property):
    parts, total = [], 0.0
    for bug, (res, secs) in bug_campaigns.items():
        kind, pass_name = DESIGNATED[bug]
        hits = [r for r in res.reports if r.kind == kind]
        total += secs
        parts.append(f"{bug.value} {len(hits)} {kind.value}")
        assert hits, bug
        assert all(r.kind == kind for r in res.reports), bug
        if pass_name is not None:
            assert all(r.localization.faulting_pass == pass_name for r in hits), bug
    _detail(record_property, ", ".join(parts) + f"; {total:.1f} s total")
    assert total < 600


@pytest.mark.acceptance(3, "oracle equivalence")
def test_criterion_3_oracle_equivalence(corpus, record_property):
    runs = 0
    for e in corpus:
        m = executable(lower(e.ast, e.name))
        for seed in range(100):
            env = ExecEnv(seed, seed)
            a, b = interpret(e.ast, env, e.outputs), execute(m, env, e.outputs)
            assert (a.status, a.output_hash) == (b.status, b.output_hash), (e.name, seed)
            assert a.outputs == b.outputs, (e.name, seed)
            runs += 1
    _detail(record_property, f"{runs} IR executions bit-equal to the interpreter")


def _inst_count(m):
    return sum(1 for fn in m.functions for _ in fn.insts())


@pytest.mark.acceptance(4, "half promotion")
def test_criterion_4_half_promotion(corpus, record_property):
    mediump = [e for e in corpus if "mediump" in e.text]
    assert mediump
    for e in mediump:
        m = lower(e.ast, e.name)
        assert has_half(m)
        promoted = run_pipeline(m).ir
        assert not has_half(promoted)
        f32 = lower(shader(e.text.replace("mediump ", "")), e.name)
        assert not has_half(f32)
        for seed in range(20):
            env = ExecEnv(seed, seed)
            a = execute(promoted, env, e.outputs)
            b = execute(f32, env, e.outputs)
            assert (a.status, a.output_hash) == (b.status, b.output_hash), (e.name, seed)
    no_half = PipelineConfig(passes=tuple(p for p in PipelineConfig().passes if p != PassId.HalfPromote))
    f32_count = 0
    for e in corpus:
        m = lower(e.ast, e.name)
        if has_half(m):
            continue
        f32_count += 1
        with_pass, without = run_pipeline(m).ir, run_pipeline(m, no_half).ir
        assert print_module(with_pass) == print_module(without)
        assert _inst_count(executable(with_pass)) == _inst_count(without)
    _detail(record_property, f"{len(mediump)} mediump shaders hash-equal to f32 relowering on 20 seeds; "
                             f"{f32_count} f32 shaders gain 0 instructions")


def _trip1_modules(corpus):
    for e in corpus:
        sites = [n.nid for n in A.walk(e.ast) if isinstance(n, A.Assign)]
        for nid in sites:
            try:
                wrapped = mutate_control_flow(e.ast, nid, TransformKind.SingleIterationLoopWrap, SplitMix64(0))
            except NotApplicable:
                continue
            yield e.name, lower(wrapped, e.name)
            break


@pytest.mark.acceptance(5, "stall budget")
def test_criterion_5_stall_budget(corpus, record_property):
    worst, n = 0.0, 0
    bug = frozenset({BugId.UnrollNonterminating})
    for name, m in _trip1_modules(corpus):
        for budget, trace in ((64, False), (64, True), (5, False), (100, False)):
            t0 = time.perf_counter()
            r = run_pipeline(m, PipelineConfig(fixpoint_budget=budget, trace=trace, injected_bugs=bug))
            secs = time.perf_counter() - t0
            worst = max(worst, secs)
            assert (r.status, r.iterations) == ("StallBudgetExceeded", budget), name
            assert secs < 5, (name, budget, secs)
            if trace:
                assert max(s.iteration for s in r.trace.snapshots) == budget
        n += 1
    assert n == len(corpus)
    _detail(record_property, f"{n} modules stall at exactly the budget (5, 64, 100); slowest {worst:.2f} s")


@pytest.mark.acceptance(6, "minimization")
def test_criterion_6_minimization(bug_campaigns, manifest, record_property):
    total = longer = 0
    for bug, (res, _) in bug_campaigns.items():
        eng = Engine(CampaignConfig(manifest, pipeline=PipelineConfig(injected_bugs=frozenset({bug}))))
        for rep in res.reports:
            entry = eng.by_name[rep.reference_name]
            env = eng.env(rep.seed)
            check = eng.checker(entry.name, env, eng.reference_exec(entry.name, env))
            mini = rep.minimized_recipe
            assert mini is not None and 1 <= len(mini.chain) <= len(rep.recipe.chain)
            assert check(replay_recipe(entry.ast, eng.ctx, mini)) == rep.kind, (bug, rep.sort_key())
            if len(mini.chain) > 1:
                longer += 1
                for step in rep.recipe.chain:
                    single = rep.recipe.with_chain([step])
                    assert _try(entry.ast, eng.ctx, single, check, {}) != rep.kind, (bug, rep.sort_key())
            total += 1
    assert total > 0
    _detail(record_property, f"{total} minimized recipes reproduce; {total - longer} have length 1, "
                             f"{longer} longer ones have no reproducing single step")


def _readelf_build_id(path):
    out = subprocess.run(["readelf", "-n", str(path)], capture_output=True, text=True, check=True).stdout
    m = re.search(r"Build ID: ([0-9a-f]+)", out)
    return m.group(1) if m else None


def _gnu_strings(path):
    out = subprocess.run(["strings", "-d", "-n", "4", str(path)], capture_output=True, check=True).stdout
    return set(out.decode("ascii").split("\n")) - {""}


@pytest.mark.acceptance(7, "forensics")
def test_criterion_7_forensics(record_property):
    blobs = FIXTURES / "blobs"
    golden = json.loads((blobs / "golden.json").read_text())
    live = shutil.which("readelf") is not None and shutil.which("strings") is not None
    for name, g in golden.items():
        data = (blobs / name).read_bytes()
        bid = extract_build_id(data).hex if g["build_id"] else None
        assert bid == g["build_id"], name
        strings = extract_strings(data)
        if g["strings"] is not None:
            assert strings == set(g["strings"]), name
        if live:
            assert bid == _readelf_build_id(blobs / name), name
            if g["strings"] is not None:
                assert strings == _gnu_strings(blobs / name), name
        assert g["planted"] in strings
        assert str(parse_version(strings)) == g["version"], name
    schemes = {str(parse_version(extract_strings((blobs / n).read_bytes()))).split(":")[0] for n in golden}
    assert {"qc", "arm", "llvm"} <= schemes
    catalog = load_catalog(FIXTURES / "catalog" / "synthetic.csv")
    want = json.loads((FIXTURES / "catalog" / "synthetic_expected.json").read_text())
    by_device = {r.device: r for r in catalog}
    p3 = estimate_delay(catalog, by_device["phone-3"])
    p4 = estimate_delay(catalog, by_device["phone-4"])
    assert (p3.delay_days, p3.outdated) == (152, True)
    assert (p4.delay_days, p4.outdated) == (0, False)
    s = aggregate_delays(catalog)
    assert {r.target.device: [r.delay_days, r.outdated] for r in s.reports} == want["delays"]
    assert (s.fraction_outdated, s.median_delay_days) == (want["fraction_outdated"], want["median_delay_days"])
    _detail(record_property, f"{len(golden)} ELF fixtures match "
                             f"{'readelf/strings live and ' if live else ''}committed goldens; D values "
                             f"{sorted(v[0] for v in want['delays'].values())} reproduced")


@pytest.mark.acceptance(8, "throughput (reported)")
def test_criterion_8_throughput(clean_campaign, bug_campaigns, record_property):
    res, _ = clean_campaign
    stats = res.stats.to_json()
    assert stats["throughput"] > 0 and stats["wall_time"] > 0
    injected = ", ".join(f"{b.value} {r.stats.throughput:.1f}/s" for b, (r, _) in bug_campaigns.items())
    soft = "meets" if stats["throughput"] >= 10 else "below"
    _detail(record_property, f"clean {stats['throughput']:.1f} variants/s ({soft} the 10/s soft target); {injected}")


def _cli(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


@pytest.mark.acceptance(9, "determinism")
def test_criterion_9_determinism(capsys, tmp_path, record_property):
    fuzz = ["fuzz", "--variants", 12, "--seed", 9, "--inject", "inst_combine_wrong_identity",
            "--reference", "wave_mix", "--reference", "branchy_select", "--reference", "tone_mapping"]
    files = {}
    for tag, threads in (("t1", 1), ("t1-again", 1), ("t8", 8), ("t8-again", 8)):
        path = tmp_path / f"{tag}.jsonl"
        code, _ = _cli(capsys, *fuzz, "--threads", threads, "--out", path)
        assert code == 2
        files[tag] = path.read_bytes()
    assert files["t1"]
    assert len(set(files.values())) == 1
    corpus_dir = FIXTURES / "corpus"
    commands = [
        ["transform", corpus_dir / "nested_loops.vert", "--seed", 4, "--depth", 6],
        ["run", corpus_dir / "textured_quad.frag", "--seed", 8, "--dump-outputs", "--optimize"],
        ["reduce", tmp_path / "t1.jsonl", "--index", 0],
        ["inspect-blob", *sorted((FIXTURES / "blobs").glob("*.so")), "--strings"],
        ["delay-report", FIXTURES / "catalog" / "synthetic.csv", "--details"],
    ]
    for argv in commands:
        first, second = _cli(capsys, *argv), _cli(capsys, *argv)
        assert first == second and first[1], argv[0]
    n_reports = files["t1"].count(b"\n")
    _detail(record_property, f"fuzz reports byte-identical across --threads 1/8 and reruns "
                             f"({n_reports} reports); {len(commands)} other commands rerun identically")
