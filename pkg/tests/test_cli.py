import json
import subprocess
import sys

import pytest

from shaderfuzz.cli import main
from shaderfuzz.ir import lower, print_module

from conftest import FIXTURES, load_golden, shader

CORPUS = FIXTURES / "corpus"
BLOBS = FIXTURES / "blobs"
CATALOG = FIXTURES / "catalog"


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _json_lines(out):
    return [json.loads(line) for line in out.splitlines() if line.strip()]


def test_help_for_every_command(capsys):
    for cmd in ("fuzz", "transform", "run", "reduce", "inspect-blob", "delay-report"):
        with pytest.raises(SystemExit) as e:
            main([cmd, "--help"])
        assert e.value.code == 0
        assert "usage:" in capsys.readouterr().out


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["run", "x.frag", "--no-such-flag"])
    assert e.value.code == 64
    assert "usage:" in capsys.readouterr().err


def test_transform_depth_zero_is_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["transform", str(CORPUS / "wave_mix.frag"), "--depth", "0"])
    assert e.value.code == 64


def test_run_golden_hash(capsys):
    golden = load_golden("corpus_hashes_seed42.json")
    for name in ("wave_mix", "blur_kernel", "counter_loops"):
        path = next(CORPUS.glob(f"{name}.*"))
        code, out, _ = _run(capsys, "run", path, "--seed", 42)
        doc = json.loads(out)
        assert code == 0
        assert (doc["status"], doc["hash"], doc["engine"]) == ("Ok", golden[name], "ir")


def test_run_dump_outputs_and_interp_agree(capsys):
    path = CORPUS / "wave_mix.frag"
    _, out_ir, _ = _run(capsys, "run", path, "--seed", 5, "--dump-outputs")
    _, out_ast, _ = _run(capsys, "run", path, "--seed", 5, "--dump-outputs", "--interp")
    a, b = json.loads(out_ir), json.loads(out_ast)
    assert len(a["outputs"]["frag_color"]) == 4
    assert (a["hash"], a["outputs"]) == (b["hash"], b["outputs"])
    assert b["engine"] == "interpreter"


def test_run_ir_input_skips_lowering(capsys, tmp_path):
    src = (CORPUS / "diffuse_light.frag").read_text()
    ir_path = tmp_path / "diffuse_light.ir"
    ir_path.write_text(print_module(lower(shader(src), "diffuse_light")))
    _, from_src, _ = _run(capsys, "run", CORPUS / "diffuse_light.frag", "--seed", 3)
    code, from_ir, _ = _run(capsys, "run", ir_path, "--seed", 3)
    assert code == 0
    assert json.loads(from_ir)["format"] == "ir"
    assert json.loads(from_ir)["hash"] == json.loads(from_src)["hash"]


def test_run_optimized_matches_unoptimized(capsys):
    path = CORPUS / "nested_loops.vert"
    _, plain, _ = _run(capsys, "run", path, "--seed", 9)
    _, opt, _ = _run(capsys, "run", path, "--seed", 9, "--optimize")
    assert json.loads(opt)["pipeline"]["status"] == "Completed"
    assert json.loads(opt)["hash"] == json.loads(plain)["hash"]


def test_run_parse_failure_exit_1(capsys, tmp_path):
    bad = tmp_path / "bad.frag"
    bad.write_text("void main() { float x = ; }\n")
    code, out, err = _run(capsys, "run", bad)
    assert code == 1 and out == "" and "ParseError" in err


def test_run_injected_stall_exit_1(capsys, tmp_path):
    src = tmp_path / "trip1.frag"
    src.write_text("in float x;\nout float o;\nvoid main() { for (int k = 0; k < 1; k++) { o = x; } }\n")
    code, out, _ = _run(capsys, "run", src, "--inject", "unroll_nonterminating", "--budget", 7)
    doc = json.loads(out)
    assert code == 1
    assert doc["pipeline"]["status"] == "StallBudgetExceeded" and doc["pipeline"]["iterations"] == 7


def test_transform_deterministic_and_replayable(capsys, tmp_path):
    src = CORPUS / "branchy_select.frag"
    for tag in ("a", "b"):
        code, _, _ = _run(capsys, "transform", src, "--seed", 11, "--depth", 5, "--out", tmp_path / tag)
        assert code == 0
    assert (tmp_path / "a.frag").read_text() == (tmp_path / "b.frag").read_text()
    assert (tmp_path / "a.recipe.json").read_text() == (tmp_path / "b.recipe.json").read_text()
    code, out, _ = _run(capsys, "transform", src, "--recipe", tmp_path / "a.recipe.json")
    assert code == 0
    assert json.loads(out)["source"] == (tmp_path / "a.frag").read_text()


def test_transform_verify(capsys):
    code, out, _ = _run(capsys, "transform", CORPUS / "switch_material.frag", "--seed", 3, "--depth", 8, "--verify")
    doc = json.loads(out)
    assert code == 0 and doc["verified"] is True and len(doc["kinds"]) == 8


def test_transform_exhausted_exit_1(capsys, tmp_path):
    empty = tmp_path / "empty.frag"
    empty.write_text("void main() {}\n")
    code, _, err = _run(capsys, "transform", empty, "--no-donors")
    assert code == 1 and "GenerationExhausted" in err


def test_fuzz_clean_exit_0(capsys):
    code, out, _ = _run(capsys, "fuzz", "--variants", 3, "--seed", 1, "--reference", "wave_mix",
                        "--reference", "int_arith")
    lines = _json_lines(out)
    assert code == 0
    assert len(lines) == 1
    stats = lines[0]["stats"]
    assert stats["processed"] == 6 and stats["references"] == 2 and stats["throughput"] > 0


def test_fuzz_injected_crash_exit_2_and_reduce(capsys, tmp_path):
    reports = tmp_path / "r.jsonl"
    code, out, _ = _run(capsys, "fuzz", "--variants", 6, "--seed", 7, "--reference", "diffuse_light",
                        "--inject", "peephole_null_deref", "--no-minimize", "--out", reports)
    assert code == 2
    assert json.loads(out)["report_count"] >= 1
    rows = _json_lines(reports.read_text())
    assert all(r["kind"] == "Crash" and r["localization"]["faulting_pass"] == "Peephole" for r in rows)
    code, out, _ = _run(capsys, "reduce", reports, "--index", 0)
    assert code == 0
    reduced = json.loads(out)
    assert len(reduced["minimized_recipe"]["chain"]) == 1
    assert reduced["minimized_recipe"]["chain"][0]["kind"] == "IfToSwitch"


def test_fuzz_threads_byte_identical(capsys, tmp_path):
    base = ["fuzz", "--variants", 4, "--seed", 2, "--reference", "branchy_select", "--reference", "wave_mix",
            "--inject", "inst_combine_wrong_identity"]
    paths = []
    for threads in (1, 3, 1):
        p = tmp_path / f"t{len(paths)}.jsonl"
        _run(capsys, *base, "--threads", threads, "--out", p)
        paths.append(p)
    texts = [p.read_bytes() for p in paths]
    assert texts[0] and texts[0] == texts[1] == texts[2]


def test_fuzz_missing_corpus_exit_1(capsys, tmp_path):
    code, _, err = _run(capsys, "fuzz", "--corpus", tmp_path / "nope.json", "--variants", 1)
    assert code == 1 and err


def test_env_var_overrides_default(capsys, monkeypatch):
    monkeypatch.setenv("SHADERFUZZ_SEED", "42")
    _, out, _ = _run(capsys, "run", CORPUS / "wave_mix.frag")
    assert json.loads(out)["hash"] == load_golden("corpus_hashes_seed42.json")["wave_mix"]
    # an explicit flag still wins
    _, out, _ = _run(capsys, "run", CORPUS / "wave_mix.frag", "--seed", 0)
    monkeypatch.delenv("SHADERFUZZ_SEED")
    _, plain, _ = _run(capsys, "run", CORPUS / "wave_mix.frag")
    assert json.loads(out)["hash"] == json.loads(plain)["hash"]


def test_inspect_blob_matches_golden(capsys):
    golden = json.loads((BLOBS / "golden.json").read_text())
    names = sorted(golden)
    code, out, _ = _run(capsys, "inspect-blob", *(BLOBS / n for n in names),
                        "--fingerprints", CATALOG / "llvm_fingerprints.json")
    assert code == 0
    docs = _json_lines(out)
    assert [d["build_id"] for d in docs] == [golden[n]["build_id"] for n in names]
    assert [d["version"] for d in docs] == [golden[n]["version"] for n in names]
    llvm = docs[names.index("llvm_commit.so")]
    assert llvm["fingerprint"] == {"label": "llvm-9", "score": "2/3", "tie": False}


def test_inspect_blob_malformed_exit_1(capsys, tmp_path):
    junk = tmp_path / "junk.so"
    junk.write_bytes(b"\x00\x01\x02\x03")
    code, _, err = _run(capsys, "inspect-blob", junk)
    assert code == 1 and "MalformedElf" in err


def test_delay_report_device_and_aggregate(capsys):
    code, out, _ = _run(capsys, "delay-report", CATALOG / "synthetic.csv", "--device", "phone-3")
    doc = json.loads(out)
    assert code == 0
    assert (doc["delay_days"], doc["outdated"], doc["r_o"], doc["r_l"]) == (152, True, "2020-01-01", "2020-06-01")
    code, out, _ = _run(capsys, "delay-report", CATALOG / "synthetic.csv")
    doc = json.loads(out)
    assert (doc["fraction_outdated"], doc["median_delay_days"], doc["max_delay_days"]) == (0.5, 76, 152)


def test_delay_report_empty_catalog_exit_1(capsys, tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("vendor,device,gpu_model,release_date,blob_build_id,blob_version\n")
    code, _, err = _run(capsys, "delay-report", p)
    assert code == 1 and "no records" in err


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "shaderfuzz.cli", "delay-report",
                          str(CATALOG / "synthetic.csv"), "--device", "phone-2"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["delay_days"] == 0
