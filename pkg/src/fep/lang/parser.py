"""Recursive-descent parser for MiniLang. Grammar: docs/minilang.md."""

from __future__ import annotations

from ..errors import LangSyntaxError
from . import ast as A
from .ast import AstNode, FunctionDef, GlobalDecl, SourceUnit, TypeTag
from .lexer import Token, tokenize

INT_MAX = 2**63 - 1

_BINARY_LEVELS = (
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
)


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("OP", "KW") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.kind != "IDENT":
            self.fail("expected identifier")
        return self.advance()

    def fail(self, message: str):
        t = self.tok
        found = t.text if t.kind != "EOF" else "end of input"
        raise LangSyntaxError(f"{message}, found {found!r}", t.line, t.col)

    # -- top level ------------------------------------------------------
    def parse_unit(self) -> SourceUnit:
        unit = SourceUnit()
        while self.tok.kind != "EOF":
            if self.at("fn"):
                unit.functions.append(self.parse_function())
            elif self.at("entry"):
                t = self.advance()
                if unit.entry is not None:
                    raise LangSyntaxError("duplicate entry declaration", t.line, t.col)
                unit.entry = self.expect_ident().text
                self.expect(";")
            elif self.at_type():
                unit.globals.append(self.parse_global())
            else:
                self.fail("expected 'fn', 'entry' or a global declaration")
        return unit

    def at_type(self) -> bool:
        return self.at("int") or self.at("bool")

    def parse_type(self, allow_void: bool = False) -> TypeTag:
        if allow_void and self.at("void"):
            self.advance()
            return TypeTag.VOID
        if self.at("bool"):
            self.advance()
            return TypeTag.BOOL
        if self.at("int"):
            self.advance()
            if self.at("["):
                self.advance()
                self.expect("]")
                return TypeTag.INT_ARRAY
            return TypeTag.INT
        self.fail("expected a type")

    def parse_global(self) -> GlobalDecl:
        t = self.tok
        ty = self.parse_type()
        name = self.expect_ident().text
        self.expect("=")
        lit = self.parse_unary()
        if lit.kind != A.LITERAL:
            raise LangSyntaxError("global initializer must be a literal", lit.span[0], lit.span[1])
        self.expect(";")
        init = list(lit.token) if isinstance(lit.token, tuple) else lit.token
        return GlobalDecl(name, ty, init, (t.line, t.col))

    def parse_function(self) -> FunctionDef:
        start = self.expect("fn")
        name = self.expect_ident().text
        self.expect("(")
        params: list[tuple[str, TypeTag]] = []
        if not self.at(")"):
            while True:
                pname = self.expect_ident().text
                self.expect(":")
                params.append((pname, self.parse_type()))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        self.expect("->")
        ret = self.parse_type(allow_void=True)
        body = self.parse_block()
        return FunctionDef(name, params, ret, body, (start.line, start.col))

    # -- statements -----------------------------------------------------
    def parse_block(self) -> AstNode:
        t = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "EOF":
                self.fail("unterminated block")
            stmts.append(self.parse_statement())
        self.advance()
        return AstNode(A.BLOCK, stmts, None, (t.line, t.col))

    def parse_statement(self) -> AstNode:
        t = self.tok
        span = (t.line, t.col)
        if self.at("if"):
            return self.parse_if()
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            return AstNode(A.WHILE, [cond, self.parse_block()], None, span)
        if self.at("for"):
            self.advance()
            self.expect("(")
            init = self.parse_simple()
            self.expect(";")
            cond = self.parse_expr()
            self.expect(";")
            update = self.parse_simple()
            if update.kind != A.ASSIGN:
                raise LangSyntaxError("for-update must be an assignment", *update.span)
            self.expect(")")
            return AstNode(A.FOR, [init, cond, update, self.parse_block()], None, span)
        if self.at("return"):
            self.advance()
            children = [] if self.at(";") else [self.parse_expr()]
            self.expect(";")
            return AstNode(A.RETURN, children, None, span)
        if self.at("throw"):
            self.advance()
            if self.tok.kind != "STRING":
                self.fail("throw expects a string literal")
            msg = self.advance().text
            self.expect(";")
            return AstNode(A.THROW, [], msg, span)
        if self.at("output"):
            self.advance()
            self.expect("(")
            value = self.parse_expr()
            self.expect(")")
            self.expect(";")
            return AstNode(A.OUTPUT, [value], None, span)
        stmt = self.parse_simple()
        self.expect(";")
        return stmt

    def parse_simple(self) -> AstNode:
        """Declaration, assignment or call statement without the trailing ';'."""
        t = self.tok
        span = (t.line, t.col)
        if self.at_type():
            ty = self.parse_type()
            name = self.expect_ident().text
            self.expect("=")
            return AstNode(A.VAR_DECL, [self.parse_expr()], (name, ty), span)
        expr = self.parse_expr()
        if self.at("="):
            if expr.kind not in (A.VAR_REF, A.INDEX):
                raise LangSyntaxError("invalid assignment target", *expr.span)
            self.advance()
            return AstNode(A.ASSIGN, [expr, self.parse_expr()], "=", span)
        if expr.kind != A.CALL:
            raise LangSyntaxError("expression statement must be a call", *expr.span)
        return AstNode(A.EXPR_STMT, [expr], None, span)

    def parse_if(self) -> AstNode:
        t = self.expect("if")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        children = [cond, self.parse_block()]
        if self.at("else"):
            self.advance()
            if self.at("if"):
                nested = self.parse_if()
                children.append(AstNode(A.BLOCK, [nested], None, nested.span))
            else:
                children.append(self.parse_block())
        return AstNode(A.IF, children, None, (t.line, t.col))

    # -- expressions ----------------------------------------------------
    def parse_expr(self, level: int = 0) -> AstNode:
        if level == len(_BINARY_LEVELS):
            return self.parse_unary()
        left = self.parse_expr(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.tok.kind == "OP" and self.tok.text in ops:
            op = self.advance().text
            right = self.parse_expr(level + 1)
            left = AstNode(A.BIN_OP, [left, right], op, left.span)
        return left

    def parse_unary(self) -> AstNode:
        t = self.tok
        if self.at("-") and self.peek().kind == "INT":
            # "-5" is a negative literal; "-(5)" stays a negation
            self.advance()
            lit = self.advance()
            return AstNode(A.LITERAL, [], self.int_value(lit, negative=True), (t.line, t.col))
        if self.at("-") or self.at("!"):
            op = self.advance().text
            operand = self.parse_unary()
            return AstNode(A.UN_OP, [operand], op, (t.line, t.col))
        return self.parse_postfix()

    def parse_postfix(self) -> AstNode:
        node = self.parse_primary()
        while self.at("["):
            self.advance()
            idx = self.parse_expr()
            self.expect("]")
            node = AstNode(A.INDEX, [node, idx], None, node.span)
        return node

    def int_value(self, tok: Token, negative: bool = False) -> int:
        value = int(tok.text)
        if negative:
            value = -value
        if not (-INT_MAX - 1 <= value <= INT_MAX):
            raise LangSyntaxError("integer literal out of 64-bit range", tok.line, tok.col)
        return value

    def parse_primary(self) -> AstNode:
        t = self.tok
        span = (t.line, t.col)
        if t.kind == "INT":
            self.advance()
            return AstNode(A.LITERAL, [], self.int_value(t), span)
        if self.at("true") or self.at("false"):
            self.advance()
            return AstNode(A.LITERAL, [], t.text == "true", span)
        if self.at("["):
            self.advance()
            items: list[int] = []
            while not self.at("]"):
                neg = False
                if self.at("-"):
                    self.advance()
                    neg = True
                if self.tok.kind != "INT":
                    self.fail("array literal elements must be integer literals")
                items.append(self.int_value(self.advance(), negative=neg))
                if not self.at(","):
                    break
                self.advance()
            self.expect("]")
            return AstNode(A.LITERAL, [], tuple(items), span)
        if self.at("("):
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if t.kind == "IDENT":
            self.advance()
            if self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.parse_expr())
                        if not self.at(","):
                            break
                        self.advance()
                self.expect(")")
                return AstNode(A.CALL, args, t.text, span)
            return AstNode(A.VAR_REF, [], t.text, span)
        self.fail("expected an expression")


def assign_ids(unit: SourceUnit) -> None:
    next_id = 0
    for fn in unit.functions:
        for node in fn.body.preorder():
            node.node_id = next_id
            next_id += 1


def parse_unvalidated(text: str) -> SourceUnit:
    unit = Parser(text).parse_unit()
    assign_ids(unit)
    return unit


def parse(text: str) -> SourceUnit:
    """Parse and validate MiniLang source."""
    from .validate import validate

    unit = parse_unvalidated(text)
    validate(unit)
    return unit
