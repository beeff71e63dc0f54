"""Static checks: scoping, typing, arity and definite return."""

from __future__ import annotations

from ..errors import LangTypeError
from . import ast as A
from .ast import AstNode, FunctionDef, SourceUnit, TypeTag

BUILTINS = {
    # name: (param types, return type)
    "len": ((TypeTag.INT_ARRAY,), TypeTag.INT),
    "array": ((TypeTag.INT,), TypeTag.INT_ARRAY),
}


def literal_type(value) -> TypeTag:
    if isinstance(value, bool):
        return TypeTag.BOOL
    if isinstance(value, int):
        return TypeTag.INT
    return TypeTag.INT_ARRAY


def _err(msg: str, node: AstNode | None = None):
    line, col = node.span if node is not None else (0, 0)
    raise LangTypeError(msg, line, col)


class _Checker:
    def __init__(self, unit: SourceUnit):
        self.unit = unit
        self.types: dict[int, TypeTag] = {}
        self.signatures: dict[str, tuple[tuple[TypeTag, ...], TypeTag]] = {}
        self.globals: dict[str, TypeTag] = {}

    def run(self) -> None:
        unit = self.unit
        for g in unit.globals:
            if g.name in self.globals:
                raise LangTypeError(f"duplicate global {g.name!r}", *g.span)
            if g.type == TypeTag.VOID or literal_type(g.init) != g.type:
                raise LangTypeError(f"global {g.name!r} initializer does not match {g.type.value}", *g.span)
            self.globals[g.name] = g.type
        for fn in unit.functions:
            if fn.name in self.signatures:
                raise LangTypeError(f"duplicate function {fn.name!r}", *fn.span)
            if fn.name in BUILTINS:
                raise LangTypeError(f"function name {fn.name!r} shadows a builtin", *fn.span)
            self.signatures[fn.name] = (tuple(t for _, t in fn.params), fn.return_type)
        if unit.entry is not None and unit.entry not in self.signatures:
            raise LangTypeError(f"entry function {unit.entry!r} is not defined")
        for fn in unit.functions:
            self.check_function(fn)
        unit.types = self.types

    def check_function(self, fn: FunctionDef) -> None:
        self.fn = fn
        scope: dict[str, TypeTag] = dict(self.globals)
        seen = set()
        for name, ty in fn.params:
            if name in seen:
                raise LangTypeError(f"duplicate parameter {name!r} in {fn.name}", *fn.span)
            if name in scope:
                raise LangTypeError(f"parameter {name!r} shadows a global", *fn.span)
            if ty == TypeTag.VOID:
                raise LangTypeError(f"parameter {name!r} cannot be void", *fn.span)
            seen.add(name)
            scope[name] = ty
        self.block(fn.body, [scope])
        if fn.return_type != TypeTag.VOID and not returns(fn.body):
            raise LangTypeError(f"function {fn.name!r} may finish without returning", *fn.span)

    # scopes is a stack of dicts; lookups walk it from the top
    def lookup(self, scopes, name: str, node: AstNode) -> TypeTag:
        for scope in reversed(scopes):
            if name in scope:
                return scope[name]
        _err(f"undeclared variable {name!r}", node)

    def declare(self, scopes, name: str, ty: TypeTag, node: AstNode) -> None:
        for scope in scopes:
            if name in scope:
                _err(f"variable {name!r} is already declared", node)
        scopes[-1][name] = ty

    def block(self, node: AstNode, scopes) -> None:
        scopes = scopes + [{}]
        for stmt in node.children:
            self.statement(stmt, scopes)

    def statement(self, node: AstNode, scopes) -> None:
        kind = node.kind
        if kind == A.VAR_DECL:
            name, ty = node.token
            init_ty = self.expr(node.children[0], scopes)
            if init_ty != ty:
                _err(f"cannot initialize {ty.value} {name!r} with {init_ty.value}", node)
            self.declare(scopes, name, ty, node)
        elif kind == A.ASSIGN:
            target, value = node.children
            t_ty = self.expr(target, scopes)
            v_ty = self.expr(value, scopes)
            if t_ty != v_ty:
                _err(f"cannot assign {v_ty.value} to {t_ty.value}", node)
        elif kind == A.IF:
            self.condition(node.children[0], scopes)
            for branch in node.children[1:]:
                self.block(branch, scopes)
        elif kind == A.WHILE:
            self.condition(node.children[0], scopes)
            self.block(node.children[1], scopes)
        elif kind == A.FOR:
            init, cond, update, body = node.children
            inner = scopes + [{}]
            self.statement(init, inner)
            self.condition(cond, inner)
            self.statement(update, inner)
            self.block(body, inner)
        elif kind == A.RETURN:
            want = self.fn.return_type
            if want == TypeTag.VOID:
                if node.children:
                    _err("void function cannot return a value", node)
            else:
                if not node.children:
                    _err(f"missing return value of type {want.value}", node)
                got = self.expr(node.children[0], scopes)
                if got != want:
                    _err(f"returning {got.value} from function declared {want.value}", node)
        elif kind == A.THROW:
            pass
        elif kind == A.EXPR_STMT:
            self.expr(node.children[0], scopes, allow_void=True)
        elif kind == A.OUTPUT:
            self.expr(node.children[0], scopes)
        else:
            _err(f"unexpected {kind} in statement position", node)

    def condition(self, node: AstNode, scopes) -> None:
        if self.expr(node, scopes) != TypeTag.BOOL:
            _err("condition must be bool", node)

    def expr(self, node: AstNode, scopes, allow_void: bool = False) -> TypeTag:
        ty = self._expr(node, scopes)
        if ty == TypeTag.VOID and not allow_void:
            _err("void value used in an expression", node)
        self.types[node.node_id] = ty
        return ty

    def _expr(self, node: AstNode, scopes) -> TypeTag:
        kind = node.kind
        if kind == A.LITERAL:
            return literal_type(node.token)
        if kind == A.VAR_REF:
            return self.lookup(scopes, node.token, node)
        if kind == A.INDEX:
            arr, idx = node.children
            if self.expr(arr, scopes) != TypeTag.INT_ARRAY:
                _err("only int[] values can be indexed", node)
            if self.expr(idx, scopes) != TypeTag.INT:
                _err("array index must be int", node)
            return TypeTag.INT
        if kind == A.UN_OP:
            operand = self.expr(node.children[0], scopes)
            want = TypeTag.INT if node.token == "-" else TypeTag.BOOL
            if operand != want:
                _err(f"operator {node.token} expects {want.value}", node)
            return want
        if kind == A.BIN_OP:
            op = node.token
            left = self.expr(node.children[0], scopes)
            right = self.expr(node.children[1], scopes)
            if op in A.ARITH_OPS:
                if left != TypeTag.INT or right != TypeTag.INT:
                    _err(f"operator {op} expects int operands", node)
                return TypeTag.INT
            if op in ("<", "<=", ">", ">="):
                if left != TypeTag.INT or right != TypeTag.INT:
                    _err(f"operator {op} expects int operands", node)
                return TypeTag.BOOL
            if op in ("==", "!="):
                if left != right or left == TypeTag.INT_ARRAY:
                    _err(f"operator {op} expects two int or two bool operands", node)
                return TypeTag.BOOL
            if op in A.LOGIC_OPS:
                if left != TypeTag.BOOL or right != TypeTag.BOOL:
                    _err(f"operator {op} expects bool operands", node)
                return TypeTag.BOOL
            _err(f"unknown operator {op}", node)
        if kind == A.CALL:
            name = node.token
            if name in BUILTINS:
                params, ret = BUILTINS[name]
            elif name in self.signatures:
                params, ret = self.signatures[name]
            else:
                _err(f"call to undefined function {name!r}", node)
            if len(params) != len(node.children):
                _err(f"{name} expects {len(params)} argument(s), got {len(node.children)}", node)
            for want, arg in zip(params, node.children):
                got = self.expr(arg, scopes)
                if got != want:
                    _err(f"argument of {name} must be {want.value}, got {got.value}", arg)
            return ret
        _err(f"unexpected {kind} in expression position", node)


def returns(node: AstNode) -> bool:
    """True if every path through ``node`` ends in return or throw."""
    if node.kind in A.EXIT_KINDS:
        return True
    if node.kind == A.BLOCK:
        return any(returns(s) for s in node.children)
    if node.kind == A.IF and len(node.children) == 3:
        return returns(node.children[1]) and returns(node.children[2])
    return False


def validate(unit: SourceUnit) -> SourceUnit:
    _Checker(unit).run()
    return unit
