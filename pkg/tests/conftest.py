import json
from pathlib import Path

import pytest

from shaderfuzz.harness import default_manifest, load_corpus
from shaderfuzz.shader_lang.checker import typecheck
from shaderfuzz.shader_lang.parser import parse

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def manifest():
    return default_manifest()


@pytest.fixture(scope="session")
def corpus(manifest):
    return load_corpus(manifest)


@pytest.fixture(scope="session")
def corpus_by_name(corpus):
    return {e.name: e for e in corpus}


def load_golden(name):
    return json.loads((GOLDEN / name).read_text())


def shader(text):
    return typecheck(parse(text))


# --- acceptance summary ---------------------------------------------------------------------------

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or (rep.when != "call" and rep.passed):
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
    if rep.when == "call" or number not in _ACCEPTANCE:
        _ACCEPTANCE[number] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, title, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number} {status}  {title}" + (f": {detail}" if detail else ""))
