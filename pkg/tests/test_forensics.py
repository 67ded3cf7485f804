import datetime as dt
import json
import os

import pytest
from hypothesis import given, settings, strategies as st

from shaderfuzz.forensics import (ArmRp, BuildIdOnly, CatalogError, FingerprintDb, FirmwareRecord,
                                  Incomparable, InsufficientData, LlvmVersion, MalformedElf, NoMatch,
                                  NotFound, NoVersionString, QualcommInternal, aggregate_delays,
                                  estimate_delay, extract_build_id, extract_strings, fingerprint_match,
                                  load_catalog, parse_version, parse_version_detail, version_from_text)
from shaderfuzz.forensics.elf import printable_runs

from conftest import FIXTURES

BLOBS = os.path.join(FIXTURES, "blobs")
CATALOG = os.path.join(FIXTURES, "catalog")

with open(os.path.join(BLOBS, "golden.json")) as _f:
    GOLDEN = json.load(_f)


def _blob(name):
    with open(os.path.join(BLOBS, name), "rb") as f:
        return f.read()


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_build_id_matches_readelf(name):
    want = GOLDEN[name]["build_id"]
    if want is None:
        with pytest.raises(NotFound):
            extract_build_id(_blob(name))
    else:
        bid = extract_build_id(_blob(name))
        assert bid.hex == want
        assert len(bid.hex) == 2 * len(bid.raw)


@pytest.mark.parametrize("name", sorted(n for n in GOLDEN if GOLDEN[n]["strings"] is not None))
def test_strings_match_gnu_strings(name):
    assert extract_strings(_blob(name)) == set(GOLDEN[name]["strings"])


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_planted_version_recovered(name):
    g = GOLDEN[name]
    strings = extract_strings(_blob(name))
    assert g["planted"] in strings
    assert str(parse_version(strings)) == g["version"]


def test_section_less_blob_falls_back_to_segments():
    with_sections = extract_strings(_blob("adreno_qc.so"))
    without = extract_strings(_blob("adreno_qc_nosections.so"))
    assert "Adreno blob EV031.42.23.11" in without
    assert with_sections <= without


def test_elf32_rejected():
    data = bytearray(_blob("adreno_qc.so"))
    data[4] = 1
    with pytest.raises(MalformedElf, match="32-bit"):
        extract_build_id(bytes(data))


def test_big_endian_rejected():
    data = bytearray(_blob("adreno_qc.so"))
    data[5] = 2
    with pytest.raises(MalformedElf):
        extract_strings(bytes(data))


def test_random_bytes_rejected():
    with pytest.raises(MalformedElf):
        extract_build_id(b"\x13\x37\xbe\xef")
    with pytest.raises(MalformedElf):
        extract_build_id(b"\x7fELF" + b"\0" * 60)


def test_truncated_elf_rejected():
    with pytest.raises(MalformedElf):
        extract_build_id(_blob("adreno_qc.so")[:200])


def test_min_len_excludes_short_runs():
    runs = printable_runs(b"\0abc\0abcd\x01xyzzy\n", 4)
    assert runs == ["abcd", "xyzzy"]
    assert all(len(s) >= 4 for s in extract_strings(_blob("mali_arm.so")))
    assert "abc" not in extract_strings(_blob("mali_arm.so"))


def test_parse_qualcomm_four_components():
    assert parse_version({"EV031.42.23.11"}) == QualcommInternal((31, 42, 23, 11))


def test_parse_arm():
    v = parse_version({"r32p1"})
    assert v == ArmRp(32, 1) and str(v) == "arm:r32p1"


def test_parse_llvm_forms():
    assert parse_version({"LLVM version 9.0.1"}) == LlvmVersion(9, 0, 1, None)
    assert parse_version({"10.0.1.f7a8b9c0d1"}) == LlvmVersion(10, 0, 1, "f7a8b9c0d1")


def test_parse_nothing():
    with pytest.raises(NoVersionString):
        parse_version({"hello", "world"})


def test_qualcomm_precedence_is_reported_ambiguous():
    d = parse_version_detail({"r32p1", "EV031.42.23.11"})
    assert isinstance(d.version, QualcommInternal) and d.ambiguous


def test_qualcomm_three_components_patch_extended():
    a, b = version_from_text("qc:31.42.23"), version_from_text("qc:31.42.23.0")
    assert a.same(b) and not a < b and not b < a
    assert a < version_from_text("qc:31.42.23.1")


def test_cross_scheme_comparison_refused():
    with pytest.raises(Incomparable):
        QualcommInternal((31, 42, 23)) < ArmRp(32, 1)
    with pytest.raises(Incomparable):
        BuildIdOnly("aa") < BuildIdOnly("bb")


def test_version_text_round_trip():
    for text in ("qc:31.42.23.11", "qc:31.35.1", "arm:r32p1", "llvm:9.0.1", "llvm:10.0.1.f7a8b9c0d1"):
        assert str(version_from_text(text)) == text


LLVM_DB = FingerprintDb({"llvm-9": {"gvn-hoist", "loop-unroll", "mergeicmps"},
                         "llvm-2.8": {"loop-rotate", "simplifycfg"}})


def test_fingerprint_overlap_score():
    m = fingerprint_match({"gvn-hoist", "mergeicmps", "unrelated"}, LLVM_DB)
    assert (m.label, m.score, m.tie) == ("llvm-9", pytest.approx(2 / 3), False)


def test_fingerprint_disjoint_no_match():
    with pytest.raises(NoMatch):
        fingerprint_match({"nothing", "here"}, LLVM_DB)


def test_fingerprint_below_threshold():
    with pytest.raises(NoMatch):
        fingerprint_match({"gvn-hoist"}, LLVM_DB, threshold=0.5)
    assert fingerprint_match({"gvn-hoist"}, LLVM_DB).label == "llvm-9"


def test_fingerprint_tie_picks_smaller_label():
    db = FingerprintDb({"b": {"x", "y"}, "a": {"x", "z"}})
    m = fingerprint_match({"x"}, db)
    assert (m.label, m.tie) == ("a", True)


def test_fingerprint_db_file(tmp_path):
    db = FingerprintDb.load(os.path.join(CATALOG, "llvm_fingerprints.json"))
    assert db.entries == LLVM_DB.entries
    m = fingerprint_match(extract_strings(_blob("llvm_commit.so")), db)
    assert m.label == "llvm-9"
    p = tmp_path / "dup.json"
    p.write_text('{"a": ["x"], "a": ["y"]}')
    with pytest.raises(ValueError, match="duplicate"):
        FingerprintDb.load(p)
    with pytest.raises(ValueError):
        FingerprintDb({"a": []})


def _rec(device, date, bid, version, gpu="G1", vendor="V"):
    return FirmwareRecord(vendor, device, gpu, dt.date.fromisoformat(date), bid, version_from_text(version))


def test_delay_hand_example():
    f1 = _rec("f1", "2020-01-01", "b1", "qc:31.42.23.0")
    f2 = _rec("f2", "2020-06-01", "b2", "qc:31.42.24.0")
    f3 = _rec("f3", "2020-09-01", "b1", "qc:31.42.23.0")
    r = estimate_delay([f1, f2, f3], f3)
    assert (r.r_o, r.r_l, r.delay_days, r.outdated) == (dt.date(2020, 1, 1), dt.date(2020, 6, 1), 152, True)
    assert r.v_l == f2.blob_version


def test_delay_current_target():
    f1 = _rec("f1", "2020-01-01", "b1", "qc:31.42.23.0")
    f2 = _rec("f2", "2020-06-01", "b2", "qc:31.42.24.0")
    r = estimate_delay([f1, f2], f2)
    assert (r.delay_days, r.outdated) == (0, False)
    assert r.v_l.same(r.v_o)


def test_delay_insufficient():
    only = _rec("f1", "2020-01-01", "b1", "qc:31.42.23.0")
    with pytest.raises(InsufficientData):
        estimate_delay([only], only)
    a = FirmwareRecord("V", "a", "G1", dt.date(2020, 1, 1), "b1", BuildIdOnly("b1"))
    b = FirmwareRecord("V", "b", "G1", dt.date(2020, 2, 1), "b2", BuildIdOnly("b2"))
    with pytest.raises(InsufficientData):
        estimate_delay([a, b], b)
    mixed = _rec("m", "2020-03-01", "b3", "arm:r19p0")
    with pytest.raises(InsufficientData):
        estimate_delay([only, mixed], mixed)


def test_synthetic_catalog_golden():
    with open(os.path.join(CATALOG, "synthetic_expected.json")) as f:
        want = json.load(f)
    s = aggregate_delays(load_catalog(os.path.join(CATALOG, "synthetic.csv")))
    got = {r.target.device: [r.delay_days, r.outdated] for r in s.reports}
    assert got == want["delays"]
    assert s.skipped == want["skipped"]
    assert (s.fraction_outdated, s.median_delay_days, s.max_delay_days) == (
        want["fraction_outdated"], want["median_delay_days"], want["max_delay_days"])
    assert s.per_vendor == want["per_vendor"]
    for r in s.reports:
        assert r.delay_days >= 0
        assert r.outdated == (not r.v_l.same(r.v_o))


def test_single_record_catalog_has_empty_aggregates():
    s = aggregate_delays([_rec("f1", "2020-01-01", "b1", "qc:31.42.23.0")])
    assert (s.reports, s.skipped, s.fraction_outdated, s.median_delay_days, s.per_vendor) == ([], 1, None, None, {})


def test_all_current_catalog():
    cat = [_rec("f1", "2020-01-01", "b1", "arm:r19p0"), _rec("f2", "2020-02-01", "b2", "arm:r20p0"),
           _rec("f3", "2020-03-01", "b3", "arm:r21p0")]
    s = aggregate_delays(cat)
    assert s.fraction_outdated == 0 and s.median_delay_days is None


def test_catalog_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("vendor,device\nV,d\n")
    with pytest.raises(CatalogError):
        load_catalog(p)
    p.write_text("vendor,device,gpu_model,release_date,blob_build_id,blob_version\nV,d,G,2020-13-01,b,qc:1.2.3\n")
    with pytest.raises(CatalogError, match=":2:"):
        load_catalog(p)


@given(st.permutations(load_catalog(os.path.join(CATALOG, "synthetic.csv"))))
@settings(max_examples=30, deadline=None)
def test_delay_order_insensitive(perm):
    base = load_catalog(os.path.join(CATALOG, "synthetic.csv"))
    for target in base:
        try:
            want = estimate_delay(base, target)
        except InsufficientData:
            with pytest.raises(InsufficientData):
                estimate_delay(perm, target)
            continue
        assert estimate_delay(perm, target) == want
