"""End-to-end analysis of fault pairs, mutants and the bundled corpus."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from .classifier import SYS, UNIT, PairedExecution, classify, verdict_record
from .errors import EmptyPool, InvalidInput, NoCoveringInput, PreconditionError
from .inputgen import GeneratorConfig, InputPool, generate_pool
from .instrument import AlignedInstrumentation, instrument_pair
from .lang import ast as A
from .lang import parse
from .lang.ast import AstNode, FunctionDef, SourceUnit
from .mutation import Mutant, generate_mutants, killability
from .report import OTHER, FaultReport, aggregate, classify_fix_pattern, report_csv, report_json
from .tracer import DEFAULT_STEP_BUDGET, InputVector, execute_system, execute_unit
from .treediff import DELETE, INSERT, CHANGE, EditScript, diff_functions

log = logging.getLogger(__name__)


@dataclass
class AnalysisConfig:
    seed: int = 42
    target_executions: int = 1000
    budget_seconds: float = 600.0
    int_range: tuple[int, int] = (-100, 100)
    max_array_len: int = 8
    stagnation_limit: int = 2000
    max_samples: int | None = None
    step_budget: int = DEFAULT_STEP_BUDGET

    _KEYS = {
        "seed": "seed",
        "targetExecutions": "target_executions",
        "budgetSeconds": "budget_seconds",
        "intRange": "int_range",
        "maxArrayLen": "max_array_len",
        "stagnationLimit": "stagnation_limit",
        "maxSamples": "max_samples",
        "stepBudget": "step_budget",
    }

    def merged(self, overrides: dict[str, Any] | None) -> AnalysisConfig:
        """Copy with manifest-style camelCase overrides applied."""
        if not overrides:
            return self
        changes = {}
        for key, value in overrides.items():
            if key not in self._KEYS:
                raise InvalidInput(f"unknown configuration key {key!r}")
            changes[self._KEYS[key]] = tuple(value) if key == "intRange" else value
        return replace(self, **changes)

    def generator(self, line_list: list[int], seed: int) -> GeneratorConfig:
        return GeneratorConfig(
            line_list=line_list,
            target_executions=self.target_executions,
            budget_seconds=self.budget_seconds,
            seed=seed,
            int_range=tuple(self.int_range),
            max_array_len=self.max_array_len,
            max_samples=self.max_samples,
            stagnation_limit=self.stagnation_limit,
            step_budget=self.step_budget,
        )


def derive_seed(seed: int, *parts: str) -> int:
    """Stable per-case seed, independent of scheduling."""
    h = hashlib.sha256(repr((seed,) + parts).encode()).digest()
    return int.from_bytes(h[:8], "big")


@dataclass
class FaultCase:
    case_id: str
    buggy_path: Path
    fixed_path: Path
    target_fn: str
    mode: str = UNIT
    line_list: list[int] | None = None
    project: str = ""
    notes: str = ""
    expected_fix_pattern: str | None = None
    real_style: bool = False
    config: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_json(cls, d: dict, root: Path) -> FaultCase:
        mode = d.get("mode", UNIT)
        if mode not in (UNIT, SYS):
            raise InvalidInput(f"case {d.get('caseId')}: unknown mode {mode!r}")
        return cls(
            d["caseId"],
            root / d["buggy"],
            root / d["fixed"],
            d["targetFn"],
            mode,
            d.get("lineList"),
            d.get("project", ""),
            d.get("notes", ""),
            d.get("expectedFixPattern"),
            bool(d.get("realStyle", False)),
            dict(d.get("config", {})),
        )


@dataclass
class MutantSubject:
    case_id: str
    program_path: Path
    target_fn: str
    project: str = ""
    config: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_json(cls, d: dict, root: Path) -> MutantSubject:
        return cls(d["caseId"], root / d["program"], d["targetFn"], d.get("project", ""), dict(d.get("config", {})))


@dataclass
class CorpusManifest:
    cases: list[FaultCase]
    mutant_subjects: list[MutantSubject] = field(default_factory=list)
    defaults: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def load(cls, path: Path) -> CorpusManifest:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidInput(f"cannot read manifest {path}: {e}") from e
        root = Path(path).parent
        cases = [FaultCase.from_json(c, root) for c in doc.get("cases", [])]
        subjects = [MutantSubject.from_json(s, root) for s in doc.get("mutantSubjects", [])]
        ids = [c.case_id for c in cases] + [s.case_id for s in subjects]
        dup = {i for i in ids if ids.count(i) > 1}
        if dup:
            raise InvalidInput(f"duplicate case ids in manifest: {sorted(dup)}")
        return cls(cases, subjects, dict(doc.get("defaults", {})))


def bundled_manifest_path() -> Path:
    return Path(str(resources.files("fep") / "corpus" / "manifest.json"))


def load_program(path: Path) -> SourceUnit:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InvalidInput(f"cannot read {path}: {e}") from e
    return parse(text)


# ---------------------------------------------------------------------------
# single fault


def derive_line_list(buggy_fn: FunctionDef, fixed_fn: FunctionDef, script: EditScript) -> list[int]:
    """Buggy-side lines a pool must cover for the fault to be exercised.

    Deleted and changed statements contribute their own line. An inserted
    statement has no buggy line, so it borrows one from where it lands: the
    next matched statement of the same block, else the previous one, else
    the matched statement enclosing the block. A script with no edits falls
    back to the first statement.
    """
    buggy = script.nodes.get("buggy", {})
    back = {t: s for s, t in script.mapping.items()}
    owner: dict[int, tuple[AstNode, AstNode | None]] = {}

    def index_blocks(block: AstNode, stmt: AstNode | None) -> None:
        for child in block.children:
            owner[child.node_id] = (block, stmt)
            for sub in child.children:
                if sub.kind == A.BLOCK:
                    index_blocks(sub, child)

    index_blocks(fixed_fn.body, None)

    def landing(target: int) -> int | None:
        while target in owner:
            block, stmt = owner[target]
            ids = [c.node_id for c in block.children]
            pos = ids.index(target)
            for nid in ids[pos + 1:] + ids[:pos][::-1]:
                if nid in back:
                    return back[nid]
            if stmt is None:
                return None
            if stmt.node_id in back:
                return back[stmt.node_id]
            target = stmt.node_id
        return None

    lines: set[int] = set()
    for op in script.ops:
        if op.kind in (DELETE, CHANGE):
            lines.add(buggy[op.source].span[0])
        elif op.kind == INSERT:
            src = landing(op.target)
            if src is not None:
                lines.add(buggy[src].span[0])
    if not lines and buggy_fn.body.children:
        lines.add(buggy_fn.body.children[0].span[0])
    return sorted(lines)


@dataclass
class Prepared:
    buggy: SourceUnit
    fixed: SourceUnit
    fn_name: str
    script: EditScript
    alignment: AlignedInstrumentation
    line_list: list[int]


def prepare(buggy: SourceUnit, fixed: SourceUnit, fn_name: str, mode: str, line_list=None) -> Prepared:
    for label, unit in (("buggy", buggy), ("fixed", fixed)):
        if not unit.has_function(fn_name):
            raise InvalidInput(f"{label} program has no function {fn_name!r}")
    bfn, ffn = buggy.function(fn_name), fixed.function(fn_name)
    if mode == UNIT and A.statement_count(bfn) <= 1 and A.statement_count(ffn) <= 1:
        raise PreconditionError(f"{fn_name} has a single statement in both versions")
    if mode == SYS and (buggy.entry is None or fixed.entry is None):
        raise InvalidInput("system mode needs an entry function in both versions")
    script = diff_functions(bfn, ffn).statement_script
    alignment = instrument_pair(bfn, ffn, script)
    lines = list(line_list) if line_list else derive_line_list(bfn, ffn, script)
    return Prepared(buggy, fixed, fn_name, script, alignment, lines)


def run_pair(prep: Prepared, mode: str, input_id: str, inp: InputVector, step_budget: int, fault_id: str) -> PairedExecution:
    al = prep.alignment
    if mode == UNIT:
        b = execute_unit(prep.buggy, prep.fn_name, inp, al.buggy_points, step_budget=step_budget)
        f = execute_unit(prep.fixed, prep.fn_name, inp, al.fixed_points, step_budget=step_budget)
        return PairedExecution(b, f, al, UNIT, fault_id=fault_id, input_id=input_id)
    b, b_inv = execute_system(prep.buggy, inp, prep.fn_name, al.buggy_points, step_budget=step_budget)
    f, f_inv = execute_system(prep.fixed, inp, prep.fn_name, al.fixed_points, step_budget=step_budget)
    return PairedExecution(
        b, f, al, SYS, buggy_invocations=b_inv, fixed_invocations=f_inv, fault_id=fault_id, input_id=input_id
    )


@dataclass
class CaseResult:
    report: FaultReport
    records: list[dict]
    pool: InputPool | None
    paired: list[PairedExecution] = field(default_factory=list)
    line_list: list[int] = field(default_factory=list)


def analyze_prepared(
    prep: Prepared,
    fault_id: str,
    mode: str,
    config: AnalysisConfig,
    project: str = "",
    keep_paired: bool = False,
) -> CaseResult:
    fix_pattern = classify_fix_pattern(prep.script)
    gen = config.generator(prep.line_list, derive_seed(config.seed, fault_id))
    meta = {"faultId": fault_id, "project": project, "fixPattern": fix_pattern, "mode": mode}
    try:
        pool = generate_pool(prep.buggy, prep.fn_name, gen, system=(mode == SYS))
    except EmptyPool as e:
        log.info("%s: %s", fault_id, e)
        reports, _ = aggregate([], [dict(meta, hasTS=False)])
        return CaseResult(reports[0], [], None, line_list=prep.line_list)
    records = []
    paired = []
    for input_id, inp in pool.inputs:
        pe = run_pair(prep, mode, input_id, inp, config.step_budget, fault_id)
        records.append(verdict_record(pe, classify(pe)))
        if keep_paired:
            paired.append(pe)
    reports, _ = aggregate(records, [meta])
    return CaseResult(reports[0], records, pool, paired, prep.line_list)


def analyze_case(case: FaultCase, config: AnalysisConfig, keep_paired: bool = False) -> CaseResult:
    """diff, align, generate a pool on the buggy version, classify every input."""
    cfg = config.merged(case.config)
    prep = prepare(load_program(case.buggy_path), load_program(case.fixed_path), case.target_fn, case.mode, case.line_list)
    return analyze_prepared(prep, case.case_id, case.mode, cfg, case.project, keep_paired)


# ---------------------------------------------------------------------------
# mutants


@dataclass
class MutantAnalysis:
    reports: list[FaultReport]
    records: list[dict]
    discarded: list[dict]
    generated: int
    killed: int


def analyze_mutant(mutant: Mutant, fault_id: str, config: AnalysisConfig, project: str = "") -> tuple[CaseResult | None, str | None]:
    """Classify one mutant against its parent; returns (result, discard reason)."""
    prep = prepare(mutant.mutated_unit, mutant.parent_unit, mutant.fn_name, UNIT)
    gen = config.generator(prep.line_list, derive_seed(config.seed, fault_id))
    try:
        pool = generate_pool(prep.buggy, prep.fn_name, gen)
    except EmptyPool:
        return None, "noTS"
    paired = [run_pair(prep, UNIT, i, inp, config.step_budget, fault_id) for i, inp in pool.inputs]
    try:
        kill = killability(
            mutant,
            [(i, pe.fixed, pe.buggy) for (i, _), pe in zip(pool.inputs, paired)],
        )
    except NoCoveringInput:
        return None, "notCovered"
    if not kill.killed:
        return None, "notStronglyKilled"
    records = [verdict_record(pe, classify(pe)) for pe in paired]
    meta = {"faultId": fault_id, "project": project, "fixPattern": OTHER, "mode": UNIT}
    reports, _ = aggregate(records, [meta])
    return CaseResult(reports[0], records, pool, line_list=prep.line_list), None


def _mutant_job(args) -> tuple[str, CaseResult | None, str | None, dict]:
    mutant, fault_id, config, project = args
    result, reason = analyze_mutant(mutant, fault_id, config, project)
    return fault_id, result, reason, mutant.manifest_entry()


def analyze_mutants(
    fixed_unit: SourceUnit,
    fn_name: str,
    config: AnalysisConfig,
    case_id: str = "",
    project: str = "",
    jobs: int = 1,
) -> MutantAnalysis:
    """Mutate ``fn_name``, keep strongly killed mutants and classify them."""
    mutants = generate_mutants(fixed_unit, fn_name)
    prefix = f"{case_id}:" if case_id else ""
    tasks = [(m, prefix + m.mutant_id, config, project) for m in mutants]
    reports, records, discarded = [], [], []
    for fault_id, result, reason, entry in _map(_mutant_job, tasks, jobs):
        if result is None:
            discarded.append({"faultId": fault_id, "reason": reason, **entry})
        else:
            reports.append(result.report)
            records.extend(result.records)
    return MutantAnalysis(reports, records, discarded, len(mutants), len(reports))


def _map(fn: Callable, tasks: Sequence, jobs: int) -> Iterable:
    """Ordered map, parallel when ``jobs`` > 1."""
    if jobs <= 1 or len(tasks) <= 1:
        return map(fn, tasks)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# corpus


@dataclass
class CorpusResult:
    config: AnalysisConfig
    unit: list[CaseResult]
    sys: list[CaseResult]
    mutants: MutantAnalysis
    cases: list[FaultCase]

    def documents(self) -> dict[str, str]:
        """Report files by name; identical runs give identical bytes."""
        seed = self.config.seed
        docs: dict[str, str] = {}
        for mode, results in ((UNIT, self.unit), (SYS, self.sys)):
            reports = [r.report for r in results]
            _, total = aggregate([rec for r in results for rec in r.records], [report_meta(r.report) for r in results])
            docs[f"report-{mode}.json"] = report_json(reports, total, mode, seed)
            docs[f"report-{mode}.csv"] = report_csv(reports, total, mode)
        m = self.mutants
        _, total = aggregate(m.records, [report_meta(r) for r in m.reports])
        extra = {"mutants": {"generated": m.generated, "stronglyKilled": m.killed, "discarded": m.discarded}}
        docs["report-mutants.json"] = report_json(m.reports, total, UNIT, seed, extra)
        docs["report-mutants.csv"] = report_csv(m.reports, total, UNIT)
        return docs

    def verdict_lines(self) -> str:
        recs = [rec for r in self.unit + self.sys for rec in r.records] + self.mutants.records
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in recs)

    def pool_lines(self) -> str:
        rows = []
        for r in self.unit + self.sys:
            rows.append({
                "faultId": r.report.fault_id,
                "lineList": r.line_list,
                "pool": r.pool.to_json()["inputs"] if r.pool else None,
            })
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)


def report_meta(report: FaultReport) -> dict:
    return {
        "faultId": report.fault_id,
        "project": report.project,
        "fixPattern": report.fix_pattern,
        "hasTS": report.has_ts,
        "mode": report.mode,
    }


def _case_job(args) -> CaseResult:
    case, config = args
    return analyze_case(case, config)


def _subject_job(args) -> MutantAnalysis:
    subject, config = args
    cfg = config.merged(subject.config)
    return analyze_mutants(load_program(subject.program_path), subject.target_fn, cfg, subject.case_id, subject.project)


def run_corpus(
    manifest: CorpusManifest,
    config: AnalysisConfig | None = None,
    jobs: int = 1,
    include_mutants: bool = True,
    overrides: dict[str, Any] | None = None,
) -> CorpusResult:
    """Analyze every case and mutant subject of ``manifest``.

    Settings stack up as: ``config`` (seed and base values), the manifest
    defaults, ``overrides`` (camelCase, e.g. from the command line) and
    finally each case's own ``config`` block.
    """
    base = config or AnalysisConfig()
    cfg = base.merged({k: v for k, v in manifest.defaults.items() if k != "seed"}).merged(overrides)
    results = list(_map(_case_job, [(c, cfg) for c in manifest.cases], jobs))
    unit = [r for c, r in zip(manifest.cases, results) if c.mode == UNIT]
    sys_results = [r for c, r in zip(manifest.cases, results) if c.mode == SYS]
    merged = MutantAnalysis([], [], [], 0, 0)
    if include_mutants:
        for ma in _map(_subject_job, [(s, cfg) for s in manifest.mutant_subjects], jobs):
            merged.reports += ma.reports
            merged.records += ma.records
            merged.discarded += ma.discarded
            merged.generated += ma.generated
            merged.killed += ma.killed
    return CorpusResult(cfg, unit, sys_results, merged, manifest.cases)


def write_corpus_outputs(result: CorpusResult, out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    files = dict(result.documents())
    files["verdicts.jsonl"] = result.verdict_lines()
    files["pools.jsonl"] = result.pool_lines()
    for name, text in files.items():
        path = out_dir / name
        path.write_text(text)
        written.append(path)
    return written
