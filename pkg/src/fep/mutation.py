"""First-order mutants of a function and the strong-killability filter."""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

from .errors import InvalidInput, NoCoveringInput, PreconditionError
from .lang import ast as A
from .lang import parse, pretty
from .lang.ast import AstNode, FunctionDef, SourceUnit, TypeTag
from .tracer import DEFAULT_STEP_BUDGET, ExecutionOutcome, InputVector, execute_unit

AOR = "AOR"
ROR = "ROR"
LOR = "LOR"
CRP = "CRP"  # constant replacement
UOI = "UOI"  # unary operator insertion
SDL = "SDL"  # statement deletion
OPERATORS = (AOR, ROR, LOR, CRP, UOI, SDL)

LOC_BINS = ((2, 25), (26, 50), (51, 100), (101, 200), (201, None))


@dataclass
class Mutant:
    mutant_id: str
    operator_id: str
    locus: int  # nodeId in the parent
    span: tuple[int, int]
    detail: str
    mutated_unit: SourceUnit
    parent_unit: SourceUnit
    fn_name: str

    @property
    def line(self) -> int:
        return self.span[0]

    def manifest_entry(self) -> dict:
        return {
            "mutantId": self.mutant_id,
            "operatorId": self.operator_id,
            "locus": {"nodeId": self.locus, "line": self.span[0], "column": self.span[1]},
            "detail": self.detail,
        }


@dataclass
class KillabilityResult:
    killed: bool
    killing_inputs: list[str] = field(default_factory=list)
    executions: int = 0


# An edit rewrites the locus node of a deep copy in place.
_Edit = Callable[[AstNode], None]


def _edits(fn: FunctionDef, types: dict[int, TypeTag]) -> Iterator[tuple[str, AstNode, str, _Edit]]:
    arith = A.ARITH_OPS
    rel = A.REL_OPS
    conditions = set()
    for node in fn.body.preorder():
        if node.kind in (A.IF, A.WHILE):
            conditions.add(node.children[0].node_id)
        elif node.kind == A.FOR:
            conditions.add(node.children[1].node_id)
    lvalues = set()
    for node in fn.body.preorder():
        if node.kind == A.ASSIGN:
            lvalues.add(node.children[0].node_id)

    for node in fn.body.preorder():
        kind = node.kind
        if kind == A.BIN_OP and node.token in arith:
            for op in arith:
                if op != node.token:
                    yield AOR, node, f"{node.token} -> {op}", _set_token(op)
        elif kind == A.BIN_OP and node.token in rel:
            for op in rel:
                if op != node.token:
                    yield ROR, node, f"{node.token} -> {op}", _set_token(op)
        elif kind == A.BIN_OP and node.token in A.LOGIC_OPS:
            other = "||" if node.token == "&&" else "&&"
            yield LOR, node, f"{node.token} -> {other}", _set_token(other)
        elif kind == A.LITERAL and isinstance(node.token, int) and not isinstance(node.token, bool):
            c = node.token
            seen = {c}
            for repl in (0, 1, -c, c + 1):
                if repl in seen or not -(1 << 63) <= repl < (1 << 63):
                    continue
                seen.add(repl)
                yield CRP, node, f"{c} -> {repl}", _set_token(repl)
        if node.node_id in conditions:
            yield UOI, node, "negate condition", _wrap_unary("!")
        elif (
            kind in (A.VAR_REF, A.INDEX, A.CALL)
            and types.get(node.node_id) == TypeTag.INT
            and node.node_id not in lvalues
        ):
            yield UOI, node, "negate value", _wrap_unary("-")
        if kind in A.STATEMENT_KINDS and kind not in (A.RETURN, A.VAR_DECL) and _in_block(fn, node):
            yield SDL, node, "delete statement", _delete


def _set_token(token) -> _Edit:
    def edit(node: AstNode) -> None:
        node.token = token

    return edit


def _wrap_unary(op: str) -> _Edit:
    def edit(node: AstNode) -> None:
        inner = AstNode(node.kind, node.children, node.token, node.span, node.node_id)
        node.kind, node.token, node.children = A.UN_OP, op, [inner]

    return edit


def _delete(node: AstNode) -> None:
    # handled by the caller, which knows the parent block
    raise AssertionError("unreachable")


def _in_block(fn: FunctionDef, stmt: AstNode) -> bool:
    return any(s is stmt for s in A.block_statements(fn.body))


def _find(root: AstNode, node_id: int) -> tuple[AstNode, AstNode | None]:
    for node in root.preorder():
        for child in node.children:
            if child.node_id == node_id:
                return child, node
    if root.node_id == node_id:
        return root, None
    raise KeyError(node_id)


def generate_mutants(unit: SourceUnit, fn_name: str) -> list[Mutant]:
    """All valid first-order mutants of ``fn_name``, in locus order.

    The parent is re-parsed from its pretty-printed form so parent and
    mutants share one layout and line numbers line up.
    """
    if not unit.has_function(fn_name):
        raise InvalidInput(f"no function named {fn_name!r}")
    fn = unit.function(fn_name)
    if A.statement_count(fn) <= 1:
        raise PreconditionError(f"{fn_name} has a single statement; nothing to mutate around")
    parent_text = pretty(unit)
    unit = parse(parent_text)
    fn = unit.function(fn_name)
    mutants: list[Mutant] = []
    seen_ops: dict[tuple[str, int], int] = {}
    for op_id, node, detail, edit in list(_edits(fn, unit.types)):
        clone = copy.deepcopy(unit)
        target, parent = _find(clone.function(fn_name).body, node.node_id)
        if edit is _delete:
            parent.children = [c for c in parent.children if c is not target]
        else:
            edit(target)
        text = pretty(clone)
        if text == parent_text:
            continue
        try:
            mutated = parse(text)
        except InvalidInput:
            continue
        k = seen_ops.get((op_id, node.node_id), 0)
        seen_ops[(op_id, node.node_id)] = k + 1
        mutants.append(
            Mutant(
                f"{fn_name}-{op_id}-n{node.node_id}-{k}",
                op_id,
                node.node_id,
                node.span,
                detail,
                mutated,
                unit,
                fn_name,
            )
        )
    return mutants


def killability(
    mutant: Mutant,
    runs: Iterable[tuple[str, ExecutionOutcome, ExecutionOutcome]],
) -> KillabilityResult:
    """Decide strong killing from (inputId, parent outcome, mutant outcome) runs."""
    killing: list[str] = []
    covered = False
    n = 0
    for input_id, parent, child in runs:
        n += 1
        covered = covered or mutant.line in parent.coverage
        if parent.ext != child.ext:
            killing.append(input_id)
    if not covered:
        raise NoCoveringInput(f"no input reaches line {mutant.line} of {mutant.mutant_id}")
    return KillabilityResult(bool(killing), killing, 2 * n)


def strong_kill_filter(
    mutant: Mutant,
    inputs: Sequence[tuple[str, InputVector]],
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> KillabilityResult:
    """A mutant is strongly killed when some input changes the unit's ext."""
    runs = (
        (
            input_id,
            execute_unit(mutant.parent_unit, mutant.fn_name, inp, step_budget=step_budget),
            execute_unit(mutant.mutated_unit, mutant.fn_name, inp, step_budget=step_budget),
        )
        for input_id, inp in inputs
    )
    return killability(mutant, runs)


def loc_bin(count: int) -> int | None:
    """Index of the statement-count bin, or None below the smallest bin."""
    for i, (lo, hi) in enumerate(LOC_BINS):
        if count >= lo and (hi is None or count <= hi):
            return i
    return None


def stratified_sample(
    functions: Iterable[tuple[str, str, int]],
    seed: int,
) -> list[tuple[str, str]]:
    """Pick one function per (project, size bin).

    ``functions`` yields (project, function key, statement count).
    """
    groups: dict[tuple[str, int], list[str]] = {}
    for project, key, count in functions:
        b = loc_bin(count)
        if b is not None:
            groups.setdefault((project, b), []).append(key)
    rng = random.Random(seed)
    picked = []
    for project, b in sorted(groups):
        keys = sorted(groups[(project, b)])
        picked.append((project, rng.choice(keys)))
    return picked
