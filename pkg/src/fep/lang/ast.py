"""Syntax tree types for MiniLang."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Iterator


class TypeTag(str, enum.Enum):
    INT = "int"
    BOOL = "bool"
    INT_ARRAY = "int[]"
    VOID = "void"


# node kinds
BLOCK = "Block"
VAR_DECL = "VarDecl"
ASSIGN = "Assign"
IF = "If"
WHILE = "While"
FOR = "For"
RETURN = "Return"
THROW = "Throw"
EXPR_STMT = "ExprStmt"
OUTPUT = "Output"
CALL = "Call"
BIN_OP = "BinOp"
UN_OP = "UnOp"
INDEX = "Index"
LITERAL = "Literal"
VAR_REF = "VarRef"

STATEMENT_KINDS = frozenset(
    {VAR_DECL, ASSIGN, IF, WHILE, FOR, RETURN, THROW, EXPR_STMT, OUTPUT}
)
EXPRESSION_KINDS = frozenset({CALL, BIN_OP, UN_OP, INDEX, LITERAL, VAR_REF})
LOOP_KINDS = frozenset({WHILE, FOR})
EXIT_KINDS = frozenset({RETURN, THROW})

ARITH_OPS = ("+", "-", "*", "/", "%")
REL_OPS = ("<", "<=", ">", ">=", "==", "!=")
LOGIC_OPS = ("&&", "||")


@dataclass(eq=False)
class AstNode:
    """One syntax tree node.

    ``token`` holds the operator, identifier or literal payload. VarDecl
    carries ``(name, type)``; array literals carry a tuple of ints.
    Parsed units are treated as immutable; mutants edit deep copies.
    """

    kind: str
    children: list[AstNode] = field(default_factory=list)
    token: Any = None
    span: tuple[int, int] = (0, 0)
    node_id: int = -1

    @property
    def line(self) -> int:
        return self.span[0]

    @property
    def label(self) -> tuple[str, Any]:
        return (self.kind, self.token)

    def preorder(self) -> Iterator[AstNode]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def postorder(self) -> Iterator[AstNode]:
        for child in self.children:
            yield from child.postorder()
        yield self

    def structure(self) -> tuple:
        """Hashable shape+label view that ignores spans and node ids."""
        return (self.kind, self.token, tuple(c.structure() for c in self.children))

    def __repr__(self) -> str:
        return f"AstNode({self.kind}, {self.token!r}, #{self.node_id})"


@dataclass(eq=False)
class FunctionDef:
    name: str
    params: list[tuple[str, TypeTag]]
    return_type: TypeTag
    body: AstNode
    span: tuple[int, int] = (0, 0)

    def structure(self) -> tuple:
        return (
            self.name,
            tuple((n, t.value) for n, t in self.params),
            self.return_type.value,
            self.body.structure(),
        )


@dataclass(eq=False)
class GlobalDecl:
    name: str
    type: TypeTag
    init: Any
    span: tuple[int, int] = (0, 0)


@dataclass(eq=False)
class SourceUnit:
    globals: list[GlobalDecl] = field(default_factory=list)
    functions: list[FunctionDef] = field(default_factory=list)
    entry: str | None = None
    # nodeId -> static type, filled in by the validator
    types: dict[int, TypeTag] = field(default_factory=dict, repr=False)

    def function(self, name: str) -> FunctionDef:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(f"no function named {name!r}")

    def has_function(self, name: str) -> bool:
        return any(fn.name == name for fn in self.functions)

    def nodes(self) -> Iterator[AstNode]:
        for fn in self.functions:
            yield from fn.body.preorder()

    def node_index(self) -> dict[int, AstNode]:
        return {n.node_id: n for n in self.nodes()}

    def structure(self) -> tuple:
        return (
            tuple((g.name, g.type.value, _freeze(g.init)) for g in self.globals),
            tuple(fn.structure() for fn in self.functions),
            self.entry,
        )


def _freeze(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(value)
    return value


def is_statement(node: AstNode) -> bool:
    return node.kind in STATEMENT_KINDS


def block_statements(fn_body: AstNode, *, into_loops: bool = True) -> Iterator[AstNode]:
    """Statements (children of Blocks) in preorder.

    With ``into_loops=False`` the bodies of While/For are not entered.
    """
    stack = [fn_body]
    while stack:
        node = stack.pop()
        if node.kind == BLOCK:
            for child in reversed(node.children):
                stack.append(child)
            continue
        if node.kind in STATEMENT_KINDS:
            yield node
            if node.kind in LOOP_KINDS and not into_loops:
                continue
            for child in reversed(node.children):
                if child.kind == BLOCK:
                    stack.append(child)


def statement_count(fn: FunctionDef) -> int:
    """Number of statements in ``fn``; a loop counts as one statement."""
    return sum(1 for _ in block_statements(fn.body, into_loops=False))


def own_nodes(stmt: AstNode) -> list[AstNode]:
    """``stmt`` plus every descendant not nested inside one of its Blocks.

    Nested Block nodes are included themselves but their contents are not.
    """
    out = [stmt]
    stack = list(reversed(stmt.children))
    while stack:
        node = stack.pop()
        out.append(node)
        if node.kind != BLOCK:
            stack.extend(reversed(node.children))
    return out
