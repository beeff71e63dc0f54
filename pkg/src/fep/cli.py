"""Command-line entry point: ``fep <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from . import __version__
from .classifier import MODES, SYS, UNIT, PairedExecution, classify, verdict_record
from .errors import FepError, InvalidInput
from .inputgen import GeneratorConfig, generate_pool
from .instrument import BUGGY, FIXED, AlignedInstrumentation, ProgramPoint
from .lang import pretty
from .mutation import generate_mutants
from .pipeline import (
    AnalysisConfig,
    CorpusManifest,
    analyze_mutants,
    analyze_prepared,
    bundled_manifest_path,
    load_program,
    prepare,
    report_meta,
    run_corpus,
    write_corpus_outputs,
)
from .report import aggregate, report_csv, report_json
from .tracer import InputVector, execute_system, execute_unit
from .treediff import diff_functions

log = logging.getLogger("fep")


def _load_json(text_or_path: str, what: str) -> Any:
    """Parse inline JSON, or read it from a file when the text names one."""
    try:
        if text_or_path.lstrip().startswith(("{", "[")):
            return json.loads(text_or_path)
        return json.loads(Path(text_or_path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidInput(f"cannot read {what}: {e}") from e


def _load_jsonl(path: str, what: str) -> list[dict]:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InvalidInput(f"cannot read {what}: {e}") from e
    stripped = text.strip()
    try:
        if stripped.startswith("["):
            return json.loads(stripped)
        if stripped.startswith("{") and "\n{" not in stripped:
            return [json.loads(stripped)]
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    except json.JSONDecodeError as e:
        raise InvalidInput(f"malformed {what}: {e}") from e


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _int_pair(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from e
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return lo, hi


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated line numbers, got {text!r}") from e


def _config(args) -> AnalysisConfig:
    cfg = AnalysisConfig(seed=args.seed)
    if args.budget_seconds is not None:
        cfg.budget_seconds = args.budget_seconds
    for attr in ("target_executions", "int_range", "max_array_len", "step_budget"):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, attr, value)
    return cfg


# ---------------------------------------------------------------------------
# commands


def cmd_parse(args) -> int:
    unit = load_program(args.program)
    if args.json:
        doc = {"structure": unit.structure(), "entry": unit.entry, "functions": [f.name for f in unit.functions]}
        _emit(_dump(doc), args.json)
    else:
        sys.stdout.write(pretty(unit))
    return 0


def cmd_diff(args) -> int:
    prep = prepare(load_program(args.buggy), load_program(args.fixed), args.fn, args.mode or UNIT)
    doc = prep.script.to_json()
    if args.nodes:
        fd = diff_functions(prep.buggy.function(args.fn), prep.fixed.function(args.fn))
        doc["nodeScript"] = fd.node_script.to_json()
    _emit(_dump(doc), args.json)
    return 0


def cmd_align(args) -> int:
    prep = prepare(load_program(args.buggy), load_program(args.fixed), args.fn, args.mode or UNIT)
    _emit(_dump(prep.alignment.to_json()), args.json or args.out)
    return 0


def cmd_gen_inputs(args) -> int:
    unit = load_program(args.program)
    cfg = _config(args)
    gen = GeneratorConfig(
        line_list=args.lines,
        goals_multiply=args.goals_multiply,
        target_executions=cfg.target_executions,
        budget_seconds=cfg.budget_seconds,
        seed=args.seed,
        int_range=cfg.int_range,
        max_array_len=cfg.max_array_len,
        step_budget=cfg.step_budget,
    )
    pool = generate_pool(unit, args.fn, gen, system=(args.mode == SYS))
    _emit(_dump(pool.to_json()), args.out or args.json)
    return 0


def _points(path: str | None, version: str) -> list[ProgramPoint]:
    if path is None:
        return []
    doc = _load_json(path, "points")
    if isinstance(doc, dict):
        return AlignedInstrumentation.from_json(doc).points(version)
    return [ProgramPoint.from_json(p) for p in doc]


def _input_vector(doc: Any) -> InputVector:
    # a bare list is shorthand for {"args": [...]}
    if isinstance(doc, list):
        return InputVector(doc)
    if isinstance(doc, dict) and isinstance(doc.get("args", []), list):
        return InputVector.from_json(doc)
    raise InvalidInput("input must be a JSON list of arguments or an object with an 'args' list")


def cmd_run(args) -> int:
    unit = load_program(args.program)
    inp = _input_vector(_load_json(args.input, "input"))
    points = _points(args.points, args.version)
    cfg = _config(args)
    if args.mode == SYS:
        outcome, invocations = execute_system(unit, inp, args.fn, points, step_budget=cfg.step_budget)
        doc = {"system": outcome.to_json(), "invocations": [o.to_json() for o in invocations]}
    else:
        doc = execute_unit(unit, args.fn, inp, points, step_budget=cfg.step_budget).to_json()
    _emit(_dump(doc), args.json)
    return 0


def cmd_classify(args) -> int:
    lines = []
    for d in _load_jsonl(args.paired, "paired executions"):
        try:
            pe = PairedExecution.from_json(d)
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInput(f"malformed paired execution: {e}") from e
        lines.append(json.dumps(verdict_record(pe, classify(pe)), sort_keys=True))
    _emit("".join(line + "\n" for line in lines), args.json)
    return 0


def cmd_mutate(args) -> int:
    unit = load_program(args.program)
    mutants = generate_mutants(unit, args.fn)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for m in mutants:
        name = f"{m.mutant_id}.mlang"
        (out / name).write_text(pretty(m.mutated_unit))
        entries.append(dict(m.manifest_entry(), file=name))
    (out / "parent.mlang").write_text(pretty(mutants[0].parent_unit if mutants else unit))
    (out / "manifest.json").write_text(_dump({"function": args.fn, "parent": "parent.mlang", "mutants": entries}))
    print(f"wrote {len(mutants)} mutants to {out}")
    return 0


def _write_reports(reports, records, mode: str, args, extra: dict | None = None) -> None:
    _, total = aggregate(records, [report_meta(r) for r in reports])
    text = report_json(reports, total, mode, args.seed, extra)
    if args.csv:
        Path(args.csv).write_text(report_csv(reports, total, mode))
    if getattr(args, "verdicts_out", None):
        Path(args.verdicts_out).write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    _emit(text, args.json)


def cmd_analyze(args) -> int:
    cfg = _config(args)
    if args.mutants:
        if not args.program:
            raise InvalidInput("--mutants needs --program")
        ma = analyze_mutants(load_program(args.program), args.fn, cfg, args.fault_id or "", jobs=args.jobs)
        extra = {"mutants": {"generated": ma.generated, "stronglyKilled": ma.killed, "discarded": ma.discarded}}
        _write_reports(ma.reports, ma.records, UNIT, args, extra)
        return 0
    if not (args.buggy and args.fixed):
        raise InvalidInput("analyze needs --buggy and --fixed (or --mutants --program)")
    mode = args.mode or UNIT
    prep = prepare(load_program(args.buggy), load_program(args.fixed), args.fn, mode, args.lines)
    fault_id = args.fault_id or Path(args.buggy).stem
    result = analyze_prepared(prep, fault_id, mode, cfg, keep_paired=bool(args.paired_out))
    if args.paired_out:
        Path(args.paired_out).write_text("".join(json.dumps(pe.to_json(), sort_keys=True) + "\n" for pe in result.paired))
    _write_reports([result.report], result.records, mode, args)
    return 0


def cmd_report(args) -> int:
    records = _load_jsonl(args.verdicts, "verdict records")
    modes = {r.get("mode") for r in records}
    mode = args.mode or (modes.pop() if len(modes) == 1 else None)
    if mode is None and records:
        raise InvalidInput("records mix modes; pass --mode to pick one")
    if args.mode:
        records = [r for r in records if r.get("mode") == args.mode]
    reports, total = aggregate(records)
    mode = mode or UNIT
    if args.csv:
        Path(args.csv).write_text(report_csv(reports, total, mode))
    _emit(report_json(reports, total, mode, args.seed), args.json)
    return 0


def cmd_corpus_run(args) -> int:
    manifest = CorpusManifest.load(Path(args.manifest) if args.manifest else bundled_manifest_path())
    if args.mode:
        manifest.cases = [c for c in manifest.cases if c.mode == args.mode]
    overrides = {}
    if args.budget_seconds is not None:
        overrides["budgetSeconds"] = args.budget_seconds
    for attr, key in (
        ("target_executions", "targetExecutions"),
        ("int_range", "intRange"),
        ("max_array_len", "maxArrayLen"),
        ("step_budget", "stepBudget"),
    ):
        if getattr(args, attr) is not None:
            overrides[key] = getattr(args, attr)
    result = run_corpus(
        manifest,
        AnalysisConfig(seed=args.seed),
        jobs=args.jobs,
        include_mutants=not args.no_mutants and args.mode != SYS,
        overrides=overrides,
    )
    if args.out:
        for path in write_corpus_outputs(result, Path(args.out)):
            log.info("wrote %s", path)
    docs = result.documents()
    if args.json:
        _emit(docs[f"report-{args.mode or UNIT}.json"], args.json)
    if args.csv:
        Path(args.csv).write_text(docs[f"report-{args.mode or UNIT}.csv"])
    if not (args.out or args.json):
        sys.stdout.write(docs[f"report-{args.mode or UNIT}.json"])
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="random seed (default 42)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    common.add_argument("--mode", choices=MODES, default=None, help="unit or sys analysis")
    common.add_argument("--budget-seconds", type=float, default=None, help="wall-clock cap per input pool")
    common.add_argument("--json", metavar="PATH", default=None, help="write JSON output here ('-' for stdout)")
    common.add_argument("--csv", metavar="PATH", default=None, help="also write a CSV table")
    common.add_argument("-v", "--verbose", action="store_true")

    gen = argparse.ArgumentParser(add_help=False)
    gen.add_argument("--target", dest="target_executions", type=int, default=None, help="executions per fault")
    gen.add_argument("--int-range", type=_int_pair, default=None, metavar="LO,HI")
    gen.add_argument("--max-array-len", type=int, default=None)
    gen.add_argument("--step-budget", type=int, default=None)

    parser = argparse.ArgumentParser(prog="fep", description="Measure failed error propagation on MiniLang faults.")
    parser.add_argument("--version", action="version", version=f"fep {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="validate a program and pretty-print it")
    p.add_argument("program")
    p.set_defaults(func=cmd_parse)

    for name, func, helptext in (
        ("diff", cmd_diff, "statement-level edit script between two versions"),
        ("align", cmd_align, "program points and their correspondence"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--buggy", required=True)
        p.add_argument("--fixed", required=True)
        p.add_argument("--fn", required=True)
        if name == "diff":
            p.add_argument("--nodes", action="store_true", help="include the node-level script")
        else:
            p.add_argument("--out", default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("gen-inputs", parents=[common, gen], help="generate a covering input pool")
    p.add_argument("--program", required=True)
    p.add_argument("--fn", required=True)
    p.add_argument("--lines", type=_int_list, required=True)
    p.add_argument("--goals-multiply", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen_inputs)

    p = sub.add_parser("run", parents=[common, gen], help="execute one input and print the outcome")
    p.add_argument("--program", required=True)
    p.add_argument("--fn", required=True)
    p.add_argument("--input", required=True, help="inline JSON or a file")
    p.add_argument("--points", default=None, help="alignment or point list JSON")
    p.add_argument("--version", choices=(BUGGY, FIXED), default=BUGGY, help="which side of an alignment file")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("classify", parents=[common], help="verdicts for stored paired executions")
    p.add_argument("--paired", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("mutate", parents=[common], help="write first-order mutants of a function")
    p.add_argument("--program", required=True)
    p.add_argument("--fn", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("analyze", parents=[common, gen], help="full analysis of a fault pair or of mutants")
    p.add_argument("--buggy")
    p.add_argument("--fixed")
    p.add_argument("--program", help="fixed program to mutate (with --mutants)")
    p.add_argument("--fn", required=True)
    p.add_argument("--mutants", action="store_true")
    p.add_argument("--lines", type=_int_list, default=None)
    p.add_argument("--fault-id", default=None)
    p.add_argument("--verdicts-out", default=None, help="write verdict records (JSON lines)")
    p.add_argument("--paired-out", default=None, help="write paired executions (JSON lines)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", parents=[common], help="aggregate verdict records into tables")
    p.add_argument("--verdicts", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("corpus", help="bundled corpus commands")
    corpus = p.add_subparsers(dest="corpus_command", required=True)
    p = corpus.add_parser("run", parents=[common, gen], help="analyze every case of a manifest")
    p.add_argument("--manifest", default=None, help="defaults to the bundled corpus")
    p.add_argument("--out", default=None, help="directory for reports and JSON-lines artifacts")
    p.add_argument("--no-mutants", action="store_true")
    p.set_defaults(func=cmd_corpus_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InvalidInput as e:
        print(f"fep: invalid input: {e}", file=sys.stderr)
        return 2
    except FepError as e:
        print(f"fep: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
