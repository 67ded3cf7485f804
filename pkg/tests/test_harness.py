import json

import pytest

from shaderfuzz.harness import (AdapterConfig, AdapterProtocolError, AdapterSpawnError, AnomalyKind,
                                CampaignConfig, CorpusError, Engine, NonReproducible, adapter_compile,
                                classify_result, load_corpus, minimize, read_reports, run_campaign,
                                stub_command, swap_mix_arguments, write_reports)
from shaderfuzz.harness.classify import hash_text
from shaderfuzz.metamorph import DonorContext, generate_variant
from shaderfuzz.opt import BugId, PipelineConfig
from shaderfuzz.runtime import ExecResult

OK_A = ExecResult("Ok", 1, 5)
OK_B = ExecResult("Ok", 2, 5)
TRAP = ExecResult("Trap", None, 3, reason="IntDivByZero")


@pytest.mark.parametrize("status,var,kind", [
    ("Completed", OK_A, None),
    ("Completed", OK_B, AnomalyKind.SemanticDivergence),
    ("Completed", TRAP, AnomalyKind.SemanticDivergence),
    ("Completed", ExecResult("StepBudgetExceeded", None, 9), AnomalyKind.SemanticDivergence),
    ("InternalFault", None, AnomalyKind.Crash),
    ("AdapterCrash", None, AnomalyKind.Crash),
    ("StallBudgetExceeded", None, AnomalyKind.Stall),
    ("AdapterTimeout", None, AnomalyKind.Stall),
])
def test_decision_table(status, var, kind):
    assert classify_result(OK_A, status, var) == kind


def test_reference_failure_is_not_a_finding():
    with pytest.raises(ValueError):
        classify_result(TRAP, "Completed", OK_A)


def test_hash_text():
    assert hash_text(OK_A) == "0000000000000001"
    assert hash_text(TRAP) == "Trap:IntDivByZero"
    assert hash_text(None) is None


def test_swap_mix_arguments_nested():
    assert swap_mix_arguments("x = mix(a, mix(b, c, 0.5), 1.0);") == "x = mix(mix(c, b, 0.5), a, 1.0);"
    assert swap_mix_arguments(swap_mix_arguments("mix(f(a, b), c, d)")) == "mix(f(a, b), c, d)"


def _adapter(*args, timeout=10.0):
    return AdapterConfig(stub_command(*args), timeout=timeout)


def test_adapter_identity_round_trip(corpus):
    from shaderfuzz.ir import lower, print_module

    e = corpus[0]
    out = adapter_compile(e.text, _adapter("--mode", "identity"))
    assert out.completed
    assert print_module(out.ir).split("\n", 1)[1] == print_module(lower(e.ast, "adapter")).split("\n", 1)[1]


def test_adapter_failure_modes(corpus):
    text = corpus[0].text
    assert adapter_compile(text, _adapter("--mode", "sleep", timeout=0.5)).status == "AdapterTimeout"
    sig = adapter_compile(text, _adapter("--mode", "signal"))
    assert sig.status == "AdapterCrash" and "signal" in sig.detail
    assert adapter_compile(text, _adapter("--mode", "exit")).status == "AdapterCrash"
    with pytest.raises(AdapterProtocolError):
        adapter_compile(text, _adapter("--mode", "garbage"))
    with pytest.raises(AdapterSpawnError):
        adapter_compile(text, AdapterConfig(("/nonexistent/compiler",)))


def test_adapter_config_validation():
    with pytest.raises(ValueError):
        AdapterConfig(())
    with pytest.raises(ValueError):
        AdapterConfig(("x",), timeout=0)
    with pytest.raises(ValueError):
        AdapterConfig(("x",), mix_order="reversed")


def test_campaign_config_validation(manifest):
    with pytest.raises(ValueError):
        CampaignConfig(manifest, variants_per_reference=0)
    with pytest.raises(ValueError):
        CampaignConfig(manifest, timeout=0)


def test_missing_corpus():
    with pytest.raises(CorpusError):
        run_campaign(CampaignConfig("/nonexistent/manifest.json", variants_per_reference=1))


def test_trapping_reference_is_corpus_error(tmp_path):
    (tmp_path / "bad.frag").write_text(
        "in float x;\nout float o;\nvoid main() { int z = int(x * 0.0); o = float(1 / z); }\n")
    (tmp_path / "m.json").write_text(json.dumps({"shaders": [{"name": "bad", "path": "bad.frag", "stage": "fragment"}]}))
    with pytest.raises(CorpusError):
        run_campaign(CampaignConfig(str(tmp_path / "m.json"), variants_per_reference=1))


def _find_report(manifest, bug, refs, n=20):
    cfg = CampaignConfig(manifest, variants_per_reference=n, seed=3, references=refs,
                         pipeline=PipelineConfig(injected_bugs=frozenset({bug})))
    return run_campaign(cfg)


def test_small_clean_campaign(manifest):
    res = run_campaign(CampaignConfig(manifest, variants_per_reference=4, seed=11))
    assert res.reports == [] and res.exit_code == 0
    assert res.stats.processed == 4 * 23 and not res.stats.oracle_violations
    assert res.stats.throughput == pytest.approx(res.stats.processed / res.stats.wall_time)


def test_report_invariants_and_minimization(manifest, corpus_by_name):
    res = _find_report(manifest, BugId.InstCombineWrongIdentity, ("wave_mix", "diffuse_light"))
    assert res.exit_code == 2 and res.reports
    eng = Engine(CampaignConfig(manifest, pipeline=PipelineConfig(injected_bugs=frozenset({BugId.InstCombineWrongIdentity}))))
    for r in res.reports:
        assert r.kind == AnomalyKind.SemanticDivergence
        assert r.hashes[0] and r.hashes[1] and r.hashes[0] != r.hashes[1]
        assert r.injection_set == ("inst_combine_wrong_identity",)
        assert r.localization.faulting_pass == "InstCombine"
        assert len(r.minimized_recipe.chain) <= len(r.recipe.chain)
        assert all(s in r.recipe.chain for s in r.minimized_recipe.chain)
        entry = corpus_by_name[r.reference_name]
        env = eng.env(r.seed)
        check = eng.checker(entry.name, env, eng.reference_exec(entry.name, env))
        again = minimize(entry.ast, eng.ctx, r.minimized_recipe, r.kind, check)
        assert again.chain == r.minimized_recipe.chain  # fixpoint


def test_minimize_non_reproducible(manifest, corpus):
    eng = Engine(CampaignConfig(manifest))
    e = corpus[0]
    v = generate_variant(e.ast, eng.ctx, 1, 3, reference_name=e.name)
    env = eng.env(1)
    with pytest.raises(NonReproducible):
        minimize(e.ast, eng.ctx, v.recipe, AnomalyKind.Crash, eng.checker(e.name, env, eng.reference_exec(e.name, env)))


def test_minimize_long_chain_to_single_step(manifest, corpus_by_name):
    bug = BugId.PeepholeNullDeref
    eng = Engine(CampaignConfig(manifest, pipeline=PipelineConfig(injected_bugs=frozenset({bug}))))
    e = corpus_by_name["diffuse_light"]
    for seed in range(400):
        v = generate_variant(e.ast, eng.ctx, seed, 8, reference_name=e.name, oracle=False)
        env = eng.env(seed)
        ref = eng.reference_exec(e.name, env)
        check = eng.checker(e.name, env, ref)
        if check(v) == AnomalyKind.Crash:
            m = minimize(e.ast, eng.ctx, v.recipe, AnomalyKind.Crash, check)
            assert len(m.chain) == 1 and m.chain[0].kind.value == "IfToSwitch"
            return
    pytest.fail("no crashing depth-8 variant found")


def test_dce_report_flags_undef(manifest):
    res = _find_report(manifest, BugId.DceDropsLiveStore, ("switch_material", "branchy_select", "diffuse_light"), n=60)
    sd = [r for r in res.reports if r.kind == AnomalyKind.SemanticDivergence]
    assert sd
    assert all(r.localization.faulting_pass == "Dce" for r in sd)
    assert any(r.localization.ddg_summary and r.localization.ddg_summary.undef_sites for r in sd)


def test_adapter_campaign_marks_localization_unavailable(manifest):
    cfg = CampaignConfig(manifest, variants_per_reference=6, references=("diffuse_light",), seed=7,
                         adapter=AdapterConfig(stub_command("--bug", "peephole_null_deref")))
    res = run_campaign(cfg)
    assert res.reports
    for r in res.reports:
        assert r.kind == AnomalyKind.Crash
        assert r.localization.unavailable and r.localization.faulting_pass is None
        assert "exit status" in r.detail


def test_reports_file_round_trip_and_parallel_determinism(manifest, tmp_path):
    base = dict(variants_per_reference=6, seed=5, references=("wave_mix", "diffuse_light", "switch_material"),
                pipeline=PipelineConfig(injected_bugs=frozenset({BugId.InstCombineWrongIdentity})))
    a = run_campaign(CampaignConfig(manifest, parallelism=1, **base))
    b = run_campaign(CampaignConfig(manifest, parallelism=2, **base))
    pa, pb = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_reports(str(pa), a.reports)
    write_reports(str(pb), b.reports)
    assert pa.read_bytes() == pb.read_bytes() and a.reports
    back = read_reports(str(pa))
    assert [r.dumps() for r in back] == [r.dumps() for r in a.reports]
