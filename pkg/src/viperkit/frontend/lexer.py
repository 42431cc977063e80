"""Tokenizer for the supported C subset.

Comments and preprocessor lines are kept in the token stream (kinds
``comment`` and ``directive``) so that callers can treat them as trivia
without losing their position.
"""
from __future__ import annotations

import bisect
import re
from typing import NamedTuple


class CSyntaxError(SyntaxError):
    """Raised for input outside the supported C subset."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message

    def __reduce__(self):
        return (type(self), (self.line, self.message))


KEYWORDS = frozenset({
    "void", "char", "short", "int", "long", "float", "double", "signed",
    "unsigned", "const", "static", "extern", "volatile", "register",
    "if", "else", "for", "while", "return", "sizeof", "typedef",
    # recognised only so they can be rejected with a clear message
    "goto", "switch", "case", "default", "do", "break", "continue",
    "struct", "union", "enum",
})

# builtin type names that are not C keywords but behave like them here
BUILTIN_TYPES = frozenset({"wchar_t", "size_t", "ssize_t", "int64_t", "int32_t",
                           "int16_t", "int8_t", "uint64_t", "uint32_t", "uint16_t",
                           "uint8_t", "FILE"})

PUNCTUATORS = (
    "<<=", ">>=", "...",
    "++", "--", "+=", "-=", "*=", "/=", "%=", "<=", ">=", "==", "!=", "&&",
    "||", "->", "<<", ">>", "&=", "|=", "^=",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "&", "|", "^", "~", "?",
    ":", ";", ",", ".", "(", ")", "[", "]", "{", "}",
)


class Token(NamedTuple):
    kind: str
    text: str
    start: int
    end: int
    line: int
    col: int
    end_line: int
    end_col: int

    @property
    def is_trivia(self) -> bool:
        return self.kind in ("comment", "directive")


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"(0[xX][0-9a-fA-F]+|[0-9]+)([uUlL]*)")
_WS = re.compile(r"[ \t\r\f\v\n]+")


class _Positions:
    def __init__(self, source: str):
        self.starts = [0]
        for m in re.finditer("\n", source):
            self.starts.append(m.end())

    def at(self, offset: int) -> tuple[int, int]:
        line = bisect.bisect_right(self.starts, offset)
        return line, offset - self.starts[line - 1] + 1


def _scan_quoted(source: str, i: int, quote: str, pos: _Positions) -> int:
    j = i + 1
    n = len(source)
    while j < n:
        c = source[j]
        if c == "\\":
            j += 2
            continue
        if c == quote:
            return j + 1
        if c == "\n":
            break
        j += 1
    raise CSyntaxError(pos.at(i)[0], f"unterminated {quote}-literal")


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens, trivia included."""
    pos = _Positions(source)
    out: list[Token] = []
    i, n = 0, len(source)
    at_line_start = True

    def emit(kind: str, a: int, b: int) -> None:
        line, col = pos.at(a)
        eline, ecol = pos.at(b - 1) if b > a else (line, col)
        out.append(Token(kind, source[a:b], a, b, line, col, eline, ecol + 1))

    while i < n:
        m = _WS.match(source, i)
        if m:
            if "\n" in m.group():
                at_line_start = True
            i = m.end()
            continue
        c = source[i]
        if c == "#" and at_line_start:
            j = source.find("\n", i)
            j = n if j < 0 else j
            end = j
            while end > i and source[end - 1] in " \t\r":
                end -= 1
            emit("directive", i, end)
            i = j
            continue
        at_line_start = False
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise CSyntaxError(pos.at(i)[0], "unterminated comment")
            emit("comment", i, j + 2)
            i = j + 2
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            j = n if j < 0 else j
            end = j
            while end > i and source[end - 1] in " \t\r":
                end -= 1
            emit("comment", i, end)
            i = j
            continue
        if c in "\"'" or (c == "L" and i + 1 < n and source[i + 1] in "\"'"):
            q = source[i + 1] if c == "L" else c
            start_q = i + 1 if c == "L" else i
            j = _scan_quoted(source, start_q, q, pos)
            emit("string" if q == '"' else "char", i, j)
            i = j
            continue
        if c.isdigit():
            m = _NUMBER.match(source, i)
            j = m.end()
            if j < n and (source[j] == "." or source[j].isalnum() or source[j] == "_"):
                raise CSyntaxError(pos.at(i)[0], "unsupported numeric literal")
            emit("int", i, j)
            i = j
            continue
        m = _IDENT.match(source, i)
        if m:
            word = m.group()
            emit("keyword" if word in KEYWORDS else "ident", i, m.end())
            i = m.end()
            continue
        for p in PUNCTUATORS:
            if source.startswith(p, i):
                emit("punct", i, i + len(p))
                i += len(p)
                break
        else:
            raise CSyntaxError(pos.at(i)[0], f"unexpected character {c!r}")
    return out


def significant(tokens: list[Token]) -> list[Token]:
    return [t for t in tokens if not t.is_trivia]


def token_texts(source: str) -> list[str]:
    """Non-trivia token texts; the basis for token-equivalence checks."""
    return [t.text for t in tokenize(source) if t.kind != "comment"]


def int_literal_value(text: str) -> int:
    body = text.rstrip("uUlL")
    if body.lower().startswith("0x"):
        return int(body, 16)
    if len(body) > 1 and body.startswith("0"):
        return int(body, 8)
    return int(body)


_ESCAPES = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34,
            "a": 7, "b": 8, "f": 12, "v": 11, "?": 63}


def _decode_body(body: str) -> list[int]:
    vals = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\" and i + 1 < len(body):
            e = body[i + 1]
            if e == "x":
                m = re.match(r"[0-9a-fA-F]+", body[i + 2:])
                vals.append(int(m.group(), 16) if m else 0)
                i += 2 + (len(m.group()) if m else 0)
                continue
            if e in "01234567":
                m = re.match(r"[0-7]{1,3}", body[i + 1:])
                vals.append(int(m.group(), 8))
                i += 1 + len(m.group())
                continue
            vals.append(_ESCAPES.get(e, ord(e)))
            i += 2
            continue
        vals.append(ord(c))
        i += 1
    return vals


def char_literal_value(text: str) -> int:
    body = text[2:-1] if text.startswith("L") else text[1:-1]
    vals = _decode_body(body)
    return vals[0] if vals else 0


def string_literal_length(text: str) -> int:
    """Number of characters in the literal, excluding the terminator."""
    body = text[2:-1] if text.startswith("L") else text[1:-1]
    return len(_decode_body(body))
