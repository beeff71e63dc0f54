"""Program point placement and buggy/fixed point correspondence.

Each version gets ``pp0`` at entry and a point after every KEEP/CHANGE
statement that is not a return/throw. When such a statement is followed by
a run of DELETE (buggy side) or INSERT (fixed side) statements the point
moves past the run; a run reaching the end of its block produces no point.
Loop bodies are never entered. On the buggy side the position directly
before a deleted run also gets a point of its own, which has no
counterpart in the fixed version.

Corresponding points are those produced for the same matched statement
pair, which for well-behaved scripts is the same as pairing the n-th point
of each visit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import MisalignedScript
from .lang import ast as A
from .lang.ast import AstNode, FunctionDef
from .treediff import CHANGE, DELETE, INSERT, KEEP, EditScript

BUGGY = "buggy"
FIXED = "fixed"


@dataclass(frozen=True)
class ProgramPoint:
    pp_index: int
    anchor: int | None  # nodeId the point sits after; None for pp0
    version: str
    line: int = 0

    def to_json(self) -> dict:
        return {"ppIndex": self.pp_index, "anchorNode": self.anchor, "version": self.version, "line": self.line}

    @classmethod
    def from_json(cls, d: dict) -> ProgramPoint:
        return cls(int(d["ppIndex"]), d.get("anchorNode"), d.get("version", BUGGY), int(d.get("line", 0)))


@dataclass
class AlignedInstrumentation:
    buggy_points: list[ProgramPoint]
    fixed_points: list[ProgramPoint]
    # buggy ppIndex -> fixed ppIndex
    correspondence: dict[int, int] = field(default_factory=dict)

    def points(self, version: str) -> list[ProgramPoint]:
        return self.buggy_points if version == BUGGY else self.fixed_points

    def to_json(self) -> dict:
        return {
            "buggyPoints": [p.to_json() for p in self.buggy_points],
            "fixedPoints": [p.to_json() for p in self.fixed_points],
            "correspondence": [[b, f] for b, f in sorted(self.correspondence.items())],
        }

    @classmethod
    def from_json(cls, d: dict) -> AlignedInstrumentation:
        return cls(
            [ProgramPoint.from_json(p) for p in d["buggyPoints"]],
            [ProgramPoint.from_json(p) for p in d["fixedPoints"]],
            {int(b): int(f) for b, f in d["correspondence"]},
        )


def _statement_end_order(body: AstNode) -> dict[int, int]:
    """Rank statements by where they end in the source (nested ones first)."""
    order: dict[int, int] = {}

    def walk(node: AstNode):
        for child in node.children:
            walk(child)
        if node.kind in A.STATEMENT_KINDS:
            order[node.node_id] = len(order)

    walk(body)
    return order


def _place(
    body: AstNode,
    labels: dict[int, str],
    skip_label: str,
    version: str,
) -> list[tuple[int, int | None, int | None, int]]:
    """Returns (sort key, anchor id, paired statement id, line) per point."""
    end_order = _statement_end_order(body)
    placed: list[tuple[int, int | None, int | None, int]] = [(-1, None, None, 0)]

    def visit_block(block: AstNode):
        stmts = block.children
        for idx, stmt in enumerate(stmts):
            label = labels[stmt.node_id]
            if label in (KEEP, CHANGE) and stmt.kind not in A.EXIT_KINDS:
                end = idx
                while end + 1 < len(stmts) and labels[stmts[end + 1].node_id] == skip_label:
                    end += 1
                if end != idx and version == BUGGY:
                    placed.append((end_order[stmt.node_id], stmt.node_id, None, _last_line(stmt)))
                trailing = end + 1 == len(stmts) and end != idx
                anchor = stmts[end]
                if not trailing and anchor.kind not in A.EXIT_KINDS:
                    placed.append((end_order[anchor.node_id], anchor.node_id, stmt.node_id, _last_line(anchor)))
            if stmt.kind not in A.LOOP_KINDS:
                for child in stmt.children:
                    if child.kind == A.BLOCK:
                        visit_block(child)

    visit_block(body)
    placed.sort(key=lambda p: p[0])
    return placed


def _last_line(node: AstNode) -> int:
    return max(n.span[0] for n in node.preorder())


def _side_labels(stmts: list[AstNode], script: EditScript, side: str) -> dict[int, str]:
    labels: dict[int, str] = {}
    for op in script.ops:
        ref = op.source if side == BUGGY else op.target
        if ref is not None:
            labels[ref] = op.kind
    ids = {s.node_id for s in stmts}
    missing = ids - labels.keys()
    extra = labels.keys() - ids
    if missing or extra:
        raise MisalignedScript(
            f"{side} script/tree mismatch: missing ops for {sorted(missing)}, unknown nodes {sorted(extra)}"
        )
    return labels


def instrument_pair(buggy_fn: FunctionDef, fixed_fn: FunctionDef, script: EditScript) -> AlignedInstrumentation:
    """Place and align program points given a statement-level edit script."""
    b_stmts = list(A.block_statements(buggy_fn.body))
    f_stmts = list(A.block_statements(fixed_fn.body))
    b_labels = _side_labels(b_stmts, script, BUGGY)
    f_labels = _side_labels(f_stmts, script, FIXED)
    for lab in b_labels.values():
        if lab == INSERT:
            raise MisalignedScript("INSERT op refers to a buggy node")
    for lab in f_labels.values():
        if lab == DELETE:
            raise MisalignedScript("DELETE op refers to a fixed node")

    b_placed = _place(buggy_fn.body, b_labels, DELETE, BUGGY)
    f_placed = _place(fixed_fn.body, f_labels, INSERT, FIXED)
    buggy_points = [ProgramPoint(i, anchor, BUGGY, line) for i, (_, anchor, _, line) in enumerate(b_placed)]
    fixed_points = [ProgramPoint(i, anchor, FIXED, line) for i, (_, anchor, _, line) in enumerate(f_placed)]

    mapping = script.mapping
    fixed_by_stmt = {stmt: i for i, (_, _, stmt, _) in enumerate(f_placed) if stmt is not None}
    candidates = [(0, 0)]
    for i, (_, _, stmt, _) in enumerate(b_placed):
        if stmt is None:
            continue
        j = fixed_by_stmt.get(mapping.get(stmt))
        if j is not None:
            candidates.append((i, j))
    return AlignedInstrumentation(buggy_points, fixed_points, dict(_monotone(candidates)))


def _monotone(pairs: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Longest order-preserving subset (pairs arrive sorted by buggy index)."""
    if all(pairs[k][1] < pairs[k + 1][1] for k in range(len(pairs) - 1)):
        return pairs
    best: list[list[tuple[int, int]]] = []
    for pair in pairs:
        chain = [pair]
        for prev in best:
            if prev[-1][1] < pair[1] and len(prev) + 1 > len(chain):
                chain = prev + [pair]
        best.append(chain)
    return max(best, key=len)
