from __future__ import annotations

from dataclasses import dataclass

from ..errors import LangSyntaxError

KEYWORDS = frozenset(
    {
        "fn", "int", "bool", "void", "if", "else", "while", "for", "return",
        "throw", "output", "true", "false", "entry",
    }
)

# longest first so that "<=" wins over "<"
OPERATORS = (
    "->", "&&", "||", "<=", ">=", "==", "!=",
    "+", "-", "*", "/", "%", "<", ">", "=", "!",
    "(", ")", "{", "}", "[", "]", ",", ";", ":",
)


@dataclass(frozen=True)
class Token:
    kind: str  # INT, IDENT, KW, STRING, OP, EOF
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line, col = 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and (text[j].isalpha() or text[j] == "_"):
                raise LangSyntaxError("malformed number", line, start_col)
            tokens.append(Token("INT", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(Token("KW" if word in KEYWORDS else "IDENT", word, line, start_col))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            while j < n and text[j] not in '"\n':
                if text[j] == "\\":
                    raise LangSyntaxError("escape sequences are not supported", line, col + j - i)
                j += 1
            if j >= n or text[j] != '"':
                raise LangSyntaxError("unterminated string literal", line, start_col)
            tokens.append(Token("STRING", text[i + 1 : j], line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        for op in OPERATORS:
            if text.startswith(op, i):
                tokens.append(Token("OP", op, line, start_col))
                i += len(op)
                col += len(op)
                break
        else:
            raise LangSyntaxError(f"unexpected character {ch!r}", line, start_col)
    tokens.append(Token("EOF", "", line, col))
    return tokens
