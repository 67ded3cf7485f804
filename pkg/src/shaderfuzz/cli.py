"""Command-line entry point.

JSON goes to stdout, diagnostics to stderr. Exit codes: 0 clean, 2 anomalies
found, 1 operational error, 64 usage error. Every flag can also be set through
an environment variable ``SHADERFUZZ_<FLAG>`` (dashes become underscores, e.g.
``SHADERFUZZ_VARIANTS=50``); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ANOMALIES = 2
EXIT_USAGE = 64
ENV_PREFIX = "SHADERFUZZ_"

log = logging.getLogger("shaderfuzz")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _depth_range(text: str) -> tuple:
    lo, _, hi = text.partition("-")
    try:
        r = (int(lo), int(hi or lo))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO-HI, got {text!r}") from None
    if not 1 <= r[0] <= r[1] <= 32:
        raise argparse.ArgumentTypeError("depth range must satisfy 1 <= LO <= HI <= 32")
    return r


def _bug(text: str) -> str:
    from .opt.bugs import BugId

    try:
        return BugId.parse(text).value
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


# --- shared loaders ---------------------------------------------------------------------------


def _manifest(path):
    from .harness import default_manifest

    return path if path else default_manifest()


def _read_shader(path: str):
    from .shader_lang.checker import typecheck
    from .shader_lang.parser import SourceShader, parse

    text = Path(path).read_text(encoding="utf-8")
    stage = "vertex" if path.endswith(".vert") else "fragment"
    return typecheck(parse(SourceShader(text, stage, Path(path).stem))), text


def _looks_like_ir(text: str) -> bool:
    for line in text.splitlines():
        s = line.strip()
        if s:
            return s.startswith((";", "@", "define "))
    return False


def _pipeline(args, trace=False):
    from .opt.pipeline import PipelineConfig

    return PipelineConfig(fixpoint_budget=args.budget, trace=trace, injected_bugs=frozenset(args.inject or ()))


# --- commands ---------------------------------------------------------------------------------


def cmd_fuzz(args) -> int:
    from .harness import AdapterConfig, CampaignConfig, run_campaign, write_reports

    adapter = None
    if args.adapter:
        adapter = AdapterConfig(tuple(shlex.split(args.adapter)), timeout=args.timeout, mix_order=args.mix_order)
    cfg = CampaignConfig(
        manifest=_manifest(args.corpus), variants_per_reference=args.variants, depth_range=args.depth,
        seed=args.seed, pipeline=_pipeline(args), adapter=adapter, timeout=args.timeout,
        parallelism=args.threads, references=tuple(args.reference) if args.reference else None,
        minimize=not args.no_minimize, localize=not args.no_localize, oracle_check=not args.no_oracle)

    def progress(done, total):
        if done % 500 == 0 or done == total:
            log.info("%d/%d variants", done, total)

    result = run_campaign(cfg, progress)
    if args.out:
        write_reports(args.out, result.reports)
        if args.stats:
            Path(args.stats).write_text(json.dumps(result.stats.to_json(), sort_keys=True) + "\n")
        _emit({"reports": args.out, "report_count": len(result.reports), "stats": result.stats.to_json()})
    else:
        for r in sorted(result.reports, key=lambda r: r.sort_key()):
            sys.stdout.write(r.dumps() + "\n")
        _emit({"stats": result.stats.to_json()})
    if result.stats.oracle_violations:
        log.error("interpreter oracle disagreed on %d variants", len(result.stats.oracle_violations))
    return result.exit_code


def _variant_paths(out: str, stage_ext: str) -> tuple:
    base = out[: -len(stage_ext)] if out.endswith(stage_ext) else out
    return base + stage_ext, base + ".recipe.json"


def cmd_transform(args) -> int:
    from .harness import load_corpus
    from .metamorph import DonorContext, VariantRecipe, generate_variant, replay_recipe
    from .metamorph.generate import default_env
    from .shader_lang.interp import interpret

    ref, _ = _read_shader(args.shader)
    name = args.name or Path(args.shader).stem
    donors = {} if args.no_donors else {e.name: e.ast for e in load_corpus(_manifest(args.corpus))}
    ctx = DonorContext(donors)
    if args.recipe:
        recipe = VariantRecipe.loads(Path(args.recipe).read_text())
        variant = replay_recipe(ref, ctx, recipe)
    else:
        variant = generate_variant(ref, ctx, args.seed, args.depth, reference_name=name, oracle=args.verify)
    doc = {"reference": name, "seed": variant.recipe.seed, "depth": variant.recipe.depth,
           "kinds": [k.value for k in variant.recipe.kinds()]}
    code = EXIT_OK
    if args.verify:
        env = default_env(variant.recipe.seed)
        outs = [n for n, _ in ref.interface("out")]
        a, b = interpret(ref, env, outs), interpret(variant.ast, env, outs)
        doc["verified"] = a.status == b.status and a.output_hash == b.output_hash
        doc["reference_exec"], doc["variant_exec"] = a.to_json(), b.to_json()
        if not doc["verified"]:
            log.error("variant does not preserve the reference's output")
            code = EXIT_ERROR
    if args.out:
        ext = ".vert" if args.shader.endswith(".vert") else ".frag"
        src_path, recipe_path = _variant_paths(args.out, ext)
        Path(src_path).write_text(variant.text, encoding="utf-8")
        Path(recipe_path).write_text(json.dumps(variant.recipe.to_json(), indent=2, sort_keys=True) + "\n")
        doc.update(variant=src_path, recipe=recipe_path)
    else:
        doc.update(source=variant.text, recipe=variant.recipe.to_json())
    _emit(doc)
    return code


def cmd_run(args) -> int:
    from .ir import lower, parse_module, verify
    from .opt.pipeline import executable, run_pipeline
    from .runtime import ExecEnv, execute
    from .shader_lang.checker import typecheck
    from .shader_lang.interp import interpret
    from .shader_lang.parser import parse

    text = Path(args.input).read_text(encoding="utf-8")
    fmt = args.format
    if fmt == "auto":
        fmt = "ir" if args.input.endswith(".ir") or _looks_like_ir(text) else "shader"
    env = ExecEnv(input_seed=args.seed, sampler_seed=args.seed if args.sampler_seed is None else args.sampler_seed,
                  step_budget=args.step_budget)
    doc = {"input": args.input, "format": fmt}
    if fmt == "ir":
        if args.interp:
            raise UsageError("--interp needs shader source, not IR")
        module = parse_module(text)
        verify(module)
    else:
        shader = typecheck(parse(text))
        if args.interp:
            result = interpret(shader, env)
            doc.update(result.to_json(), engine="interpreter")
            if args.dump_outputs:
                doc["outputs"] = {k: list(v) for k, v in sorted(result.outputs.items())}
            _emit(doc)
            return EXIT_OK
        module = lower(shader, Path(args.input).stem)
    if args.optimize or args.inject:
        pr = run_pipeline(module, _pipeline(args))
        doc["pipeline"] = {"status": pr.status, "iterations": pr.iterations, "fault_pass": pr.fault_pass}
        if not pr.completed:
            doc["detail"] = pr.detail
            _emit(doc)
            return EXIT_ERROR
        module = pr.ir
    result = execute(executable(module), env)
    doc.update(result.to_json(), engine="ir")
    if args.dump_outputs:
        doc["outputs"] = {k: list(v) for k, v in sorted(result.outputs.items())}
    _emit(doc)
    return EXIT_OK


def cmd_reduce(args) -> int:
    from .harness import CampaignConfig, Engine, NonReproducible, minimize, read_reports
    from .harness.localize import localize
    from .ir import lower
    from .metamorph import replay_recipe

    reports = read_reports(args.reports)
    if args.index is not None:
        if not 0 <= args.index < len(reports):
            raise UsageError(f"--index {args.index} out of range (file has {len(reports)} reports)")
        reports = [reports[args.index]]
    out_lines, failures = [], 0
    engines = {}
    for rep in reports:
        bugs = tuple(args.inject) if args.inject else rep.injection_set
        if bugs not in engines:
            a = argparse.Namespace(budget=args.budget, inject=bugs)
            engines[bugs] = Engine(CampaignConfig(_manifest(args.corpus), pipeline=_pipeline(a)))
        eng = engines[bugs]
        entry = eng.by_name[rep.reference_name]
        env = eng.env(rep.recipe.seed)
        ref_exec = eng.reference_exec(entry.name, env)
        try:
            mini = minimize(entry.ast, eng.ctx, rep.recipe, rep.kind, eng.checker(entry.name, env, ref_exec))
        except NonReproducible as e:
            log.error("%s", e)
            failures += 1
            continue
        target = replay_recipe(entry.ast, eng.ctx, mini)
        out, var_exec, _ = eng.run_variant(target, entry.name, env, ref_exec)
        rep.minimized_recipe = mini
        rep.localization = localize(lower(target.ast, entry.name), rep.kind, eng.cfg.pipeline, env,
                                    entry.outputs, ref_exec, var_exec, out.fault_pass)
        out_lines.append(rep.dumps())
    if args.out:
        Path(args.out).write_text("".join(line + "\n" for line in out_lines))
        _emit({"reduced": len(out_lines), "non_reproducible": failures, "out": args.out})
    else:
        for line in out_lines:
            sys.stdout.write(line + "\n")
    return EXIT_ERROR if failures else EXIT_OK


def cmd_inspect_blob(args) -> int:
    from .forensics import (BuildIdOnly, FingerprintDb, NoMatch, NotFound, NoVersionString, extract_build_id,
                            extract_strings, fingerprint_match, parse_version_detail)

    db = FingerprintDb.load(args.fingerprints) if args.fingerprints else None
    for path in args.blob:
        data = Path(path).read_bytes()
        try:
            bid = extract_build_id(data).hex
        except NotFound:
            bid = None
        strings = extract_strings(data, args.min_len)
        doc = {"path": path, "build_id": bid, "string_count": len(strings)}
        try:
            parsed = parse_version_detail(strings)
            doc["version"] = str(parsed.version)
            doc["scheme"] = parsed.version.scheme
            doc["ambiguous"] = [str(v) for v in parsed.ambiguous]
        except NoVersionString:
            doc["version"] = str(BuildIdOnly(bid or ""))
            doc["scheme"] = "bid"
            doc["ambiguous"] = []
        if db is not None:
            try:
                m = fingerprint_match(strings, db, args.threshold)
                doc["fingerprint"] = {"label": m.label, "score": str(m.score), "tie": m.tie}
            except NoMatch:
                doc["fingerprint"] = None
        if args.strings:
            doc["strings"] = sorted(strings)
        _emit(doc)
    return EXIT_OK


def cmd_delay_report(args) -> int:
    from .forensics import aggregate_delays, estimate_delay, load_catalog

    catalog = load_catalog(args.catalog)
    if not catalog:
        raise ValueError(f"catalog {args.catalog} has no records")
    if args.device:
        targets = [r for r in catalog if r.device == args.device]
        if not targets:
            raise ValueError(f"no record for device {args.device!r}")
        for t in targets:
            _emit(estimate_delay(catalog, t).to_json())
        return EXIT_OK
    summary = aggregate_delays(catalog)
    doc = summary.to_json()
    if args.details:
        doc["reports"] = [r.to_json() for r in summary.reports]
    _emit(doc)
    return EXIT_OK


# --- parser -----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    from .forensics import DEFAULT_THRESHOLD
    from .opt.bugs import BugId

    common = _Parser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="more diagnostics on stderr")

    def pipeline_flags(p):
        p.add_argument("--inject", action="append", type=_bug, metavar="BUG",
                       help="enable an injected compiler bug (repeatable): " + ", ".join(b.value for b in BugId))
        p.add_argument("--budget", type=_positive, default=64, help="pipeline fixpoint budget (default 64)")

    ap = _Parser(prog="shaderfuzz", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fuzz", parents=[common], help="run a metamorphic campaign",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--corpus", help="corpus manifest (default: bundled fixtures)")
    p.add_argument("--variants", type=_positive, default=200, help="variants per reference shader")
    p.add_argument("--seed", type=_seed, default=0, help="campaign seed")
    p.add_argument("--depth", type=_depth_range, default=(1, 8), help="transform chain length range LO-HI")
    p.add_argument("--threads", type=_positive, default=1, help="worker processes")
    p.add_argument("--reference", action="append", help="restrict to this corpus entry (repeatable)")
    p.add_argument("--adapter", help="external compiler command; shader on stdin, IR on stdout")
    p.add_argument("--mix-order", choices=("native", "glsl"), default="native", help="mix() argument order the adapter expects")
    p.add_argument("--timeout", type=float, default=10.0, help="adapter wall-clock limit in seconds")
    p.add_argument("--out", "-o", help="reports JSONL path (default: stdout, stats as the final line)")
    p.add_argument("--stats", help="also write the stats JSON here (needs --out)")
    p.add_argument("--no-minimize", action="store_true", help="skip recipe minimization")
    p.add_argument("--no-localize", action="store_true", help="skip pass localization")
    p.add_argument("--no-oracle", action="store_true", help="skip the interpreter soundness check")
    pipeline_flags(p)
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("transform", parents=[common], help="generate one variant and its recipe",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("shader", help="reference shader source (.frag or .vert)")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--depth", type=_positive, default=4, help="number of transforms")
    p.add_argument("--corpus", help="donor corpus manifest (default: bundled fixtures)")
    p.add_argument("--no-donors", action="store_true", help="disable code donation")
    p.add_argument("--name", help="reference name recorded in the recipe (default: file stem)")
    p.add_argument("--recipe", help="replay this recipe JSON instead of generating")
    p.add_argument("--verify", action="store_true", help="check the variant against the reference with the interpreter")
    p.add_argument("--out", "-o", help="output prefix; writes PREFIX.frag|.vert and PREFIX.recipe.json")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("run", parents=[common], help="execute a shader or textual IR module",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("input", help="shader source or textual IR")
    p.add_argument("--format", choices=("auto", "shader", "ir"), default="auto")
    p.add_argument("--seed", type=_seed, default=0, help="input seed")
    p.add_argument("--sampler-seed", type=_seed, help="sampler seed (default: input seed)")
    p.add_argument("--step-budget", type=_positive, default=1_000_000)
    p.add_argument("--optimize", action="store_true", help="run the optimization pipeline before executing")
    p.add_argument("--interp", action="store_true", help="use the AST interpreter instead of lowering")
    p.add_argument("--dump-outputs", action="store_true", help="include per-lane output values")
    pipeline_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reduce", parents=[common], help="re-minimize and re-localize campaign reports",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("reports", help="reports JSONL from fuzz")
    p.add_argument("--corpus", help="corpus manifest (default: bundled fixtures)")
    p.add_argument("--index", type=int, help="only this report (0-based line)")
    p.add_argument("--out", "-o", help="write reduced reports here")
    pipeline_flags(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("inspect-blob", parents=[common], help="build-id and version of ELF blobs",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("blob", nargs="+", help="ELF64 shared objects")
    p.add_argument("--min-len", type=_positive, default=4, help="minimum string length")
    p.add_argument("--fingerprints", help="fingerprint database JSON (label -> strings)")
    p.add_argument("--threshold", type=float, default=float(DEFAULT_THRESHOLD), help="fingerprint score threshold")
    p.add_argument("--strings", action="store_true", help="include the extracted strings")
    p.set_defaults(func=cmd_inspect_blob)

    p = sub.add_parser("delay-report", parents=[common], help="firmware blob update delays from a catalog",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("catalog", help="CSV: vendor,device,gpu_model,release_date,blob_build_id,blob_version")
    p.add_argument("--device", help="estimate only this device's records")
    p.add_argument("--details", action="store_true", help="include per-record reports in the aggregate")
    p.set_defaults(func=cmd_delay_report)
    return ap


def _apply_env(ap: argparse.ArgumentParser, environ) -> None:
    """Use SHADERFUZZ_* variables as defaults for matching flags."""
    subs = [a for a in ap._actions if isinstance(a, argparse._SubParsersAction)]
    parsers = [ap] + [p for s in subs for p in s.choices.values()]
    for p in parsers:
        for a in p._actions:
            if not a.option_strings or a.dest in ("help", "verbose"):
                continue
            key = ENV_PREFIX + a.dest.upper()
            if key not in environ:
                continue
            raw = environ[key]
            try:
                if isinstance(a, argparse._StoreTrueAction):
                    val = raw.strip().lower() in ("1", "true", "yes", "on")
                elif isinstance(a, argparse._AppendAction):
                    val = [a.type(x) if a.type else x for x in raw.split(",") if x]
                else:
                    val = a.type(raw) if a.type else raw
            except (argparse.ArgumentTypeError, ValueError) as e:
                p.error(f"{key}: {e}")
            p.set_defaults(**{a.dest: val})


def main(argv=None) -> int:
    ap = build_parser()
    _apply_env(ap, os.environ)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    from .forensics import CatalogError, MalformedElf
    from .harness import AdapterSpawnError, CorpusError
    from .ir import IrParseError, LoweringUnsupported, VerifyError
    from .metamorph import GenerationExhausted, RecipeMismatch
    from .shader_lang.errors import ParseError, ShaderTypeError

    try:
        return args.func(args)
    except UsageError as e:
        print(f"shaderfuzz {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, CorpusError, AdapterSpawnError, GenerationExhausted, RecipeMismatch, ParseError,
            ShaderTypeError, IrParseError, VerifyError, LoweringUnsupported, MalformedElf, CatalogError,
            ValueError, KeyError) as e:
        print(f"shaderfuzz {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
