"""MiniLang: the small deterministic imperative language the analyses run on."""

from .ast import (
    AstNode,
    FunctionDef,
    GlobalDecl,
    SourceUnit,
    TypeTag,
    block_statements,
    own_nodes,
    statement_count,
)
from .parser import parse, parse_unvalidated
from .pretty import expr_text, pretty, statement_header
from .validate import validate

__all__ = [
    "AstNode",
    "FunctionDef",
    "GlobalDecl",
    "SourceUnit",
    "TypeTag",
    "block_statements",
    "expr_text",
    "own_nodes",
    "parse",
    "parse_unvalidated",
    "pretty",
    "statement_count",
    "statement_header",
    "validate",
]
