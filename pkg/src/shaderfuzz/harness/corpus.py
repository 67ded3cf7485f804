"""Reference corpus: a JSON manifest listing shader files and their stages."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from ..shader_lang import ast as A
from ..shader_lang.checker import typecheck
from ..shader_lang.errors import ParseError, ShaderTypeError
from ..shader_lang.parser import SourceShader, parse


class CorpusError(Exception):
    pass


@dataclass
class CorpusEntry:
    name: str
    path: str
    stage: str
    text: str
    ast: A.Shader

    @property
    def outputs(self) -> list:
        return [n for n, _ in self.ast.interface("out")]


def load_corpus(manifest: str) -> list:
    """Parse and typecheck every manifest entry, in manifest order."""
    try:
        with open(manifest, encoding="utf-8") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise CorpusError(f"cannot read manifest {manifest}: {e}") from e
    root = os.path.dirname(os.path.abspath(manifest))
    entries, seen = [], set()
    for item in doc.get("shaders", []):
        try:
            name, rel, stage = item["name"], item["path"], item["stage"]
        except (KeyError, TypeError) as e:
            raise CorpusError(f"malformed manifest entry {item!r}") from e
        if name in seen:
            raise CorpusError(f"duplicate corpus name {name!r}")
        seen.add(name)
        path = os.path.join(root, rel)
        try:
            with open(path, encoding="utf-8") as f:
                text = f.read()
            ast = typecheck(parse(SourceShader(text, stage, name)))
        except OSError as e:
            raise CorpusError(f"{name}: {e}") from e
        except (ParseError, ShaderTypeError, ValueError) as e:
            raise CorpusError(f"{name}: {e}") from e
        entries.append(CorpusEntry(name, path, stage, text, ast))
    if not entries:
        raise CorpusError(f"manifest {manifest} lists no shaders")
    return entries


def default_manifest() -> str:
    """The bundled fixture corpus, located relative to the source checkout."""
    here = os.path.dirname(os.path.abspath(__file__))
    for up in (3, 4):
        cand = os.path.join(here, *[".."] * up, "fixtures", "corpus", "manifest.json")
        if os.path.exists(cand):
            return os.path.normpath(cand)
    raise CorpusError("bundled corpus not found; pass a manifest path")
