"""Canonical source printer. ``parse(pretty(u))`` is structurally ``u``."""

from __future__ import annotations

from . import ast as A
from .ast import AstNode, FunctionDef, SourceUnit, TypeTag

INDENT = "    "

_PREC = {
    "||": 0, "&&": 1, "==": 2, "!=": 2,
    "<": 3, "<=": 3, ">": 3, ">=": 3,
    "+": 4, "-": 4, "*": 5, "/": 5, "%": 5,
}
_UNARY = 6
_ATOM = 7


def literal_text(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return "[" + ", ".join(str(v) for v in value) + "]"


def _prec(node: AstNode) -> int:
    if node.kind == A.BIN_OP:
        return _PREC[node.token]
    if node.kind == A.UN_OP:
        return _UNARY
    if node.kind == A.LITERAL and isinstance(node.token, int) and not isinstance(node.token, bool) and node.token < 0:
        # "-5" binds like a unary expression
        return _UNARY
    return _ATOM


def expr_text(node: AstNode) -> str:
    kind = node.kind
    if kind == A.LITERAL:
        return literal_text(node.token)
    if kind == A.VAR_REF:
        return node.token
    if kind == A.CALL:
        return f"{node.token}(" + ", ".join(expr_text(c) for c in node.children) + ")"
    if kind == A.INDEX:
        arr, idx = node.children
        inner = expr_text(arr)
        if _prec(arr) < _ATOM:
            inner = f"({inner})"
        return f"{inner}[{expr_text(idx)}]"
    if kind == A.UN_OP:
        operand = node.children[0]
        inner = expr_text(operand)
        if node.token == "-" and inner[:1].isdigit():
            # "-5" and "-5[i]" would read back as a negative literal
            inner = f"({inner})"
        elif _prec(operand) < _UNARY:
            inner = f"({inner})"
        return f"{node.token}{inner}"
    if kind == A.BIN_OP:
        p = _PREC[node.token]
        left, right = node.children
        lt, rt = expr_text(left), expr_text(right)
        if _prec(left) < p:
            lt = f"({lt})"
        if _prec(right) <= p:
            rt = f"({rt})"
        return f"{lt} {node.token} {rt}"
    raise ValueError(f"not an expression: {kind}")


def simple_text(node: AstNode) -> str:
    """Declaration/assignment/call text without the trailing semicolon."""
    if node.kind == A.VAR_DECL:
        name, ty = node.token
        return f"{TypeTag(ty).value} {name} = {expr_text(node.children[0])}"
    if node.kind == A.ASSIGN:
        return f"{expr_text(node.children[0])} = {expr_text(node.children[1])}"
    if node.kind == A.EXPR_STMT:
        return expr_text(node.children[0])
    raise ValueError(f"not a simple statement: {node.kind}")


def statement_header(node: AstNode) -> str:
    """One-line rendering of a statement; compound bodies elided."""
    kind = node.kind
    if kind in (A.VAR_DECL, A.ASSIGN, A.EXPR_STMT):
        return simple_text(node) + ";"
    if kind == A.RETURN:
        return "return;" if not node.children else f"return {expr_text(node.children[0])};"
    if kind == A.THROW:
        return f'throw "{node.token}";'
    if kind == A.OUTPUT:
        return f"output({expr_text(node.children[0])});"
    if kind == A.IF:
        text = f"if ({expr_text(node.children[0])}) {{...}}"
        if len(node.children) == 3:
            text += " else {...}"
        return text
    if kind == A.WHILE:
        return f"while ({expr_text(node.children[0])}) {{...}}"
    if kind == A.FOR:
        init, cond, update, _ = node.children
        return f"for ({simple_text(init)}; {expr_text(cond)}; {simple_text(update)}) {{...}}"
    raise ValueError(f"not a statement: {kind}")


def _block(node: AstNode, depth: int, out: list[str], opener: str) -> None:
    """Append ``opener {`` + body + ``}``; the caller owns the closing line."""
    if not node.children:
        out.append(f"{opener} {{ }}")
        return
    out.append(f"{opener} {{")
    for stmt in node.children:
        _statement(stmt, depth + 1, out)
    out.append(INDENT * depth + "}")


def _statement(node: AstNode, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    kind = node.kind
    if kind == A.IF:
        _if(node, depth, out, pad + "if")
    elif kind == A.WHILE:
        _block(node.children[1], depth, out, f"{pad}while ({expr_text(node.children[0])})")
    elif kind == A.FOR:
        init, cond, update, body = node.children
        _block(body, depth, out, f"{pad}for ({simple_text(init)}; {expr_text(cond)}; {simple_text(update)})")
    else:
        out.append(pad + statement_header(node))


def _if(node: AstNode, depth: int, out: list[str], opener: str) -> None:
    cond, then = node.children[0], node.children[1]
    _block(then, depth, out, f"{opener} ({expr_text(cond)})")
    if len(node.children) < 3:
        return
    other = node.children[2]
    prefix = out.pop()
    if len(other.children) == 1 and other.children[0].kind == A.IF:
        _if(other.children[0], depth, out, f"{prefix} else if")
    else:
        _block(other, depth, out, f"{prefix} else")


def function_text(fn: FunctionDef) -> str:
    params = ", ".join(f"{n}:{t.value}" for n, t in fn.params)
    out: list[str] = []
    _block(fn.body, 0, out, f"fn {fn.name}({params})->{fn.return_type.value}")
    return "\n".join(out)


def pretty(unit: SourceUnit) -> str:
    parts: list[str] = []
    if unit.globals:
        parts.append(
            "\n".join(f"{g.type.value} {g.name} = {literal_text(g.init)};" for g in unit.globals)
        )
    if unit.entry is not None:
        parts.append(f"entry {unit.entry};")
    parts.extend(function_text(fn) for fn in unit.functions)
    return "\n\n".join(parts) + "\n" if parts else ""
