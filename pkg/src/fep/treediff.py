"""Tree edit distance (Zhang & Shasha) and edit scripts between ASTs.

Edit costs are unit (delete, insert, relabel). Among minimal-cost mappings
the one with the fewest relabels (i.e. the most KEEPs) is chosen; remaining
ties are broken by the fixed backtracking order in ``_backtrack``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .lang import ast as A
from .lang.ast import AstNode, FunctionDef, own_nodes
from .lang.pretty import statement_header

KEEP = "KEEP"
CHANGE = "CHANGE"
INSERT = "INSERT"
DELETE = "DELETE"


@dataclass(frozen=True)
class EditOp:
    kind: str
    source: int | None = None
    target: int | None = None

    def __post_init__(self):
        if self.kind in (KEEP, CHANGE):
            assert self.source is not None and self.target is not None
        elif self.kind == DELETE:
            assert self.source is not None and self.target is None
        elif self.kind == INSERT:
            assert self.source is None and self.target is not None
        else:
            raise ValueError(f"unknown edit op {self.kind!r}")


@dataclass
class EditScript:
    ops: list[EditOp]
    cost: int
    # statement-level scripts only: nodeId -> one-line statement text
    text: dict[str, dict[int, str]] = field(default_factory=dict, repr=False)
    # statement-level scripts only: nodeId -> statement node, per side
    nodes: dict[str, dict[int, AstNode]] = field(default_factory=dict, repr=False, compare=False)

    @property
    def mapping(self) -> dict[int, int]:
        return {op.source: op.target for op in self.ops if op.kind in (KEEP, CHANGE)}

    def kinds(self) -> list[str]:
        return [op.kind for op in self.ops]

    def to_json(self) -> dict:
        ops = []
        for op in self.ops:
            rec: dict[str, Any] = {"op": op.kind, "source": op.source, "target": op.target}
            if self.text:
                if op.source is not None:
                    rec["sourceText"] = self.text["buggy"].get(op.source)
                if op.target is not None:
                    rec["targetText"] = self.text["fixed"].get(op.target)
            ops.append(rec)
        return {"cost": self.cost, "ops": ops}


# ---------------------------------------------------------------------------
# generic Zhang-Shasha


class _Annotated:
    def __init__(self, root, children: Callable):
        self.nodes: list = [None]  # 1-based postorder
        self.lml: list[int] = [0]
        self.parent: list[int] = [0]
        stack = [(root, False)]
        # iterative postorder with leftmost-leaf tracking
        pending: list[list[int]] = []
        while stack:
            node, expanded = stack.pop()
            kids = list(children(node))
            if not expanded and kids:
                stack.append((node, True))
                pending.append([])
                for kid in reversed(kids):
                    stack.append((kid, False))
                continue
            idx = len(self.nodes)
            self.nodes.append(node)
            self.parent.append(0)
            if kids:
                child_idx = pending.pop()
                self.lml.append(self.lml[child_idx[0]])
                for c in child_idx:
                    self.parent[c] = idx
            else:
                self.lml.append(idx)
            if pending:
                pending[-1].append(idx)
        self.size = len(self.nodes) - 1
        seen: dict[int, int] = {}
        for i in range(1, self.size + 1):
            seen[self.lml[i]] = i
        self.keyroots = sorted(seen.values())


@dataclass
class Mapping:
    """Result of a tree edit distance run over arbitrary trees."""

    cost: int
    pairs: list[tuple[Any, Any]]
    deleted: list[Any]
    inserted: list[Any]

    @property
    def renames(self) -> int:
        return self.cost - len(self.deleted) - len(self.inserted)


def zhang_shasha(
    a,
    b,
    children: Callable = lambda n: n.children,
    label: Callable = lambda n: n.label,
) -> Mapping:
    """Minimal unit-cost edit mapping between ordered labeled trees ``a`` and ``b``."""
    ta = _Annotated(a, children)
    tb = _Annotated(b, children)
    la = [None] + [label(n) for n in ta.nodes[1:]]
    lb = [None] + [label(n) for n in tb.nodes[1:]]
    # weight = cost * big + relabels: minimizes cost, then prefers KEEP over CHANGE
    big = ta.size + tb.size + 1
    td = [[0] * (tb.size + 1) for _ in range(ta.size + 1)]

    def forest(i: int, j: int) -> list[list[int]]:
        li, lj = ta.lml[i], tb.lml[j]
        ioff, joff = li - 1, lj - 1
        m, n = i - ioff + 1, j - joff + 1
        fd = [[0] * n for _ in range(m)]
        for x in range(1, m):
            fd[x][0] = fd[x - 1][0] + big
        for y in range(1, n):
            fd[0][y] = fd[0][y - 1] + big
        lml_a, lml_b = ta.lml, tb.lml
        for x in range(1, m):
            xi = x + ioff
            row, prev = fd[x], fd[x - 1]
            whole_a = lml_a[xi] == li
            p = lml_a[xi] - 1 - ioff
            for y in range(1, n):
                yj = y + joff
                best = prev[y] + big
                ins = row[y - 1] + big
                if ins < best:
                    best = ins
                if whole_a and lml_b[yj] == lj:
                    sub = prev[y - 1] + (0 if la[xi] == lb[yj] else big + 1)
                    if sub < best:
                        best = sub
                    td[xi][yj] = best
                else:
                    sub = fd[p][lml_b[yj] - 1 - joff] + td[xi][yj]
                    if sub < best:
                        best = sub
                row[y] = best
        return fd

    if ta.size and tb.size:
        for i in ta.keyroots:
            for j in tb.keyroots:
                forest(i, j)

    pairs: list[tuple[int, int]] = []
    deleted: list[int] = []
    inserted: list[int] = []
    if ta.size and tb.size:
        _backtrack(ta, tb, la, lb, td, big, forest, pairs, deleted, inserted)
        total = td[ta.size][tb.size]
    else:
        deleted = list(range(1, ta.size + 1))
        inserted = list(range(1, tb.size + 1))
        total = (ta.size + tb.size) * big
    cost = total // big
    assert cost == len(deleted) + len(inserted) + (total % big)
    pairs.sort()
    return Mapping(
        cost=cost,
        pairs=[(ta.nodes[i], tb.nodes[j]) for i, j in pairs],
        deleted=[ta.nodes[i] for i in sorted(deleted)],
        inserted=[tb.nodes[j] for j in sorted(inserted)],
    )


def _backtrack(ta, tb, la, lb, td, big, forest, pairs, deleted, inserted) -> None:
    stack = [(ta.size, tb.size)]
    while stack:
        i, j = stack.pop()
        fd = forest(i, j)
        li, lj = ta.lml[i], tb.lml[j]
        ioff, joff = li - 1, lj - 1
        x, y = i - ioff, j - joff
        while x > 0 or y > 0:
            if x > 0 and y > 0:
                xi, yj = x + ioff, y + joff
                if ta.lml[xi] == li and tb.lml[yj] == lj:
                    step = 0 if la[xi] == lb[yj] else big + 1
                    if fd[x][y] == fd[x - 1][y - 1] + step:
                        pairs.append((xi, yj))
                        x, y = x - 1, y - 1
                        continue
                else:
                    p = ta.lml[xi] - 1 - ioff
                    q = tb.lml[yj] - 1 - joff
                    if fd[x][y] == fd[p][q] + td[xi][yj]:
                        stack.append((xi, yj))
                        x, y = p, q
                        continue
            if x > 0 and fd[x][y] == fd[x - 1][y] + big:
                deleted.append(x + ioff)
                x -= 1
                continue
            inserted.append(y + joff)
            y -= 1


class _Work:
    """Mutable node used while replaying an edit script."""

    def __init__(self, label, tgt=None, deleted=False):
        self.label = label
        self.tgt = tgt
        self.deleted = deleted
        self.kids: list[_Work] = []

    def freeze(self) -> tuple:
        return (self.label, tuple(k.freeze() for k in self.kids))


def apply_mapping(
    a,
    b,
    mapping: Mapping,
    children: Callable = lambda n: n.children,
    label: Callable = lambda n: n.label,
) -> tuple:
    """Replay the edit operations implied by ``mapping`` on a copy of ``a``.

    Deletions splice children into the parent, relabels copy the target
    label, insertions (in target preorder) adopt the contiguous run of
    children that belong under them. Returns the result as a nested
    ``(label, children)`` tuple comparable with ``shape(b)``.
    """
    b_pre: dict[int, int] = {}
    b_end: dict[int, int] = {}
    b_parent: dict[int, Any] = {}
    order: list = []

    def walk(node, parent):
        b_pre[id(node)] = len(order)
        b_parent[id(node)] = parent
        order.append(node)
        for kid in children(node):
            walk(kid, node)
        b_end[id(node)] = len(order)

    walk(b, None)
    target_of = {id(x): y for x, y in mapping.pairs}
    deleted = {id(x) for x in mapping.deleted}
    inserted = {id(y) for y in mapping.inserted}

    def build(node) -> _Work:
        w = _Work(label(node), target_of.get(id(node)), id(node) in deleted)
        for k in children(node):
            kid = build(k)
            if kid.deleted:
                w.kids.extend(kid.kids)
            else:
                w.kids.append(kid)
        return w

    root = _Work("<root>")
    top = build(a)
    root.kids = top.kids if top.deleted else [top]

    image: dict[int, _Work] = {}
    stack = [root]
    while stack:
        w = stack.pop()
        if w.tgt is not None:
            image[id(w.tgt)] = w
            w.label = label(w.tgt)
        stack.extend(w.kids)

    for y in order:
        if id(y) not in inserted:
            continue
        parent = b_parent[id(y)]
        host = root if parent is None else image[id(parent)]
        lo, hi = b_pre[id(y)], b_end[id(y)]
        pos = sum(1 for k in host.kids if b_pre[id(k.tgt)] < lo)
        adopt = [k for k in host.kids if lo < b_pre[id(k.tgt)] < hi]
        if host.kids[pos : pos + len(adopt)] != adopt:
            raise ValueError("not a valid edit mapping")
        w = _Work(label(y), y)
        w.kids = adopt
        host.kids[pos : pos + len(adopt)] = [w]
        image[id(y)] = w

    if len(root.kids) != 1:
        return ("<forest>", tuple(k.freeze() for k in root.kids))
    return root.kids[0].freeze()


def shape(node, children: Callable = lambda n: n.children, label: Callable = lambda n: n.label) -> tuple:
    return (label(node), tuple(shape(k, children, label) for k in children(node)))


# ---------------------------------------------------------------------------
# AST edit scripts


def _merge_ops(
    a_order: Sequence[AstNode],
    b_order: Sequence[AstNode],
    pairs: dict[int, int],
    kind_of_pair: Callable[[int, int], str],
) -> list[EditOp]:
    """Interleave ops so that both preorder sequences are respected.

    Deletions in a gap come before insertions in the same gap.
    """
    ops: list[EditOp] = []
    j = 0
    b_ids = [n.node_id for n in b_order]
    b_pos = {nid: k for k, nid in enumerate(b_ids)}
    for node in a_order:
        src = node.node_id
        if src not in pairs:
            ops.append(EditOp(DELETE, src, None))
            continue
        tgt = pairs[src]
        stop = b_pos[tgt]
        while j < stop:
            ops.append(EditOp(INSERT, None, b_ids[j]))
            j += 1
        ops.append(EditOp(kind_of_pair(src, tgt), src, tgt))
        j = stop + 1
    while j < len(b_ids):
        ops.append(EditOp(INSERT, None, b_ids[j]))
        j += 1
    return ops


def tree_edit_distance(buggy: AstNode, fixed: AstNode) -> EditScript:
    """Node-level edit script turning ``buggy`` into ``fixed``."""
    m = zhang_shasha(buggy, fixed)
    pairs = {x.node_id: y.node_id for x, y in m.pairs}
    labels_a = {n.node_id: n.label for n in buggy.preorder()}
    labels_b = {n.node_id: n.label for n in fixed.preorder()}

    def kind(src: int, tgt: int) -> str:
        return KEEP if labels_a[src] == labels_b[tgt] else CHANGE

    ops = _merge_ops(list(buggy.preorder()), list(fixed.preorder()), pairs, kind)
    return EditScript(ops=ops, cost=m.cost)


def statements_of(body: AstNode) -> list[AstNode]:
    return list(A.block_statements(body))


def lift_to_statements(buggy: AstNode, fixed: AstNode, node_script: EditScript) -> EditScript:
    """Statement-granular script from a node-level one.

    A statement is a node sitting directly in a Block. A matched statement
    pair is KEEP only when its own nodes (everything except nested Block
    contents) all map onto the partner's own nodes unchanged; otherwise
    CHANGE. A statement matched to a non-statement counts as deleted (and
    its partner side, if a statement, as inserted).
    """
    a_stmts = statements_of(buggy)
    b_stmts = statements_of(fixed)
    b_ids = {s.node_id for s in b_stmts}
    node_map = node_script.mapping
    keep_nodes = {op.source for op in node_script.ops if op.kind == KEEP}
    pairs: dict[int, int] = {}
    b_by_id = {s.node_id: s for s in b_stmts}
    for s in a_stmts:
        t_id = node_map.get(s.node_id)
        if t_id in b_ids:
            pairs[s.node_id] = t_id

    a_by_id = {s.node_id: s for s in a_stmts}

    def kind(src: int, tgt: int) -> str:
        own_a = own_nodes(a_by_id[src])
        own_b = {n.node_id for n in own_nodes(b_by_id[tgt])}
        if len(own_a) != len(own_b):
            return CHANGE
        for n in own_a:
            if n.node_id not in keep_nodes or node_map[n.node_id] not in own_b:
                return CHANGE
        return KEEP

    ops = _merge_ops(a_stmts, b_stmts, pairs, kind)
    text = {
        "buggy": {s.node_id: statement_header(s) for s in a_stmts},
        "fixed": {s.node_id: statement_header(s) for s in b_stmts},
    }
    cost = sum(1 for op in ops if op.kind != KEEP)
    nodes = {"buggy": a_by_id, "fixed": b_by_id}
    return EditScript(ops=ops, cost=cost, text=text, nodes=nodes)


@dataclass
class FunctionDiff:
    node_script: EditScript
    statement_script: EditScript


def diff_functions(buggy: FunctionDef, fixed: FunctionDef) -> FunctionDiff:
    node_script = tree_edit_distance(buggy.body, fixed.body)
    return FunctionDiff(node_script, lift_to_statements(buggy.body, fixed.body, node_script))
