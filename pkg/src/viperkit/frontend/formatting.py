"""Deterministic re-indentation (4 spaces, K&R braces, one statement per line).

Only whitespace changes: the significant token stream of the output equals
that of the input. Comments stay attached to the token that follows them.
"""
from __future__ import annotations

from . import ast as A
from .lexer import BUILTIN_TYPES, Token, tokenize
from .parser import TYPE_WORDS, parse

INDENT = "    "
_NO_SPACE_BEFORE = frozenset({";", ",", ")", "]"})
_NO_SPACE_AFTER = frozenset({"(", "["})
_PREFIX_OPS = frozenset({"-", "+", "*", "&", "!", "++", "--"})
_OPERAND_END = frozenset({")", "]", "++", "--"})


def _glues(a: str, b: str) -> bool:
    toks = tokenize(a + b)
    return [t.text for t in toks] == [a, b]


class _Printer:
    def __init__(self, ast: A.Ast):
        self.ast = ast
        self.toks = ast.tokens
        self.lines: list[str] = []
        self.type_names = set(TYPE_WORDS) | set(BUILTIN_TYPES) | set(ast.typedefs)
        self._prefix = self._classify_prefix()

    def _classify_prefix(self) -> list[bool]:
        flags = []
        prev = None
        for t in self.toks:
            is_prefix = False
            if t.kind == "punct" and t.text in _PREFIX_OPS:
                if prev is None:
                    is_prefix = True
                elif prev.kind == "punct":
                    is_prefix = prev.text not in _OPERAND_END
                elif prev.kind == "keyword":
                    is_prefix = True
                elif prev.kind == "ident" and prev.text in self.type_names:
                    is_prefix = True
                if t.text in ("++", "--") and prev is not None and not is_prefix:
                    is_prefix = False
            flags.append(is_prefix)
            prev = t
        return flags

    # -- trivia ----------------------------------------------------------
    def _comment_lines(self, tok: Token, indent: str) -> list[str]:
        if tok.kind == "directive":
            return [tok.text]
        parts = tok.text.split("\n")
        return [indent + parts[0].expandtabs(4)] + [p.expandtabs(4) for p in parts[1:]]

    def trivia_lines(self, i: int, indent: str) -> None:
        for tok in self.ast.trivia.get(i, ()):
            self.lines.extend(self._comment_lines(tok, indent))

    # -- token runs ------------------------------------------------------
    def _space(self, i: int) -> bool:
        prev, cur = self.toks[i - 1], self.toks[i]
        if cur.text in _NO_SPACE_BEFORE and cur.kind == "punct":
            return False
        if prev.kind == "punct" and prev.text in _NO_SPACE_AFTER:
            return False
        if cur.kind == "punct" and cur.text == "(":
            if prev.kind == "ident" or prev.text == "sizeof":
                return False
            return not self._prefix[i - 1]
        if cur.kind == "punct" and cur.text == "[":
            return not (prev.kind == "ident" or prev.text in ("]", ")"))
        if cur.kind == "punct" and cur.text in ("++", "--") and not self._prefix[i]:
            return False
        if self._prefix[i - 1]:
            return not _glues(prev.text, cur.text) if cur.kind == "punct" else False
        return True

    def join(self, first: int, last: int, indent: str) -> str:
        """Render tokens ``first..last``; inner comments are kept inline."""
        out = [self.toks[first].text]
        cont = indent + INDENT
        for i in range(first + 1, last + 1):
            broke = False
            for tok in self.ast.trivia.get(i, ()):
                if tok.kind == "directive":
                    out.append("\n" + tok.text + "\n" + cont)
                    broke = True
                elif tok.text.startswith("//"):
                    out.append(" " + tok.text + "\n" + cont)
                    broke = True
                else:
                    out.append(" " + tok.text.expandtabs(4))
                    broke = False
            if broke:
                out.append(self.toks[i].text)
            else:
                out.append((" " if self._space(i) or self.ast.trivia.get(i) else "") + self.toks[i].text)
        return "".join(out)

    def emit(self, indent: str, text: str) -> None:
        self.lines.extend((indent + text).split("\n") if "\n" in text else [indent + text])

    # -- statements ----------------------------------------------------------
    def open_brace(self, header: str, brace: int, indent: str) -> None:
        if self.ast.trivia.get(brace):
            self.emit(indent, header)
            self.trivia_lines(brace, indent)
            self.emit(indent, "{")
        else:
            self.emit(indent, header + " {")

    def block_body(self, block: A.Block, indent: str) -> None:
        inner = indent + INDENT
        for s in block.stmts:
            self.stmt(s, inner)
        self.trivia_lines(block.last, inner)

    def stmt(self, s: A.Stmt, indent: str, header_prefix: str = "") -> None:
        if not header_prefix:
            self.trivia_lines(s.first, indent)
        if isinstance(s, A.Block):
            self.emit(indent, header_prefix + "{")
            self.block_body(s, indent)
            self.emit(indent, "}")
        elif isinstance(s, A.If):
            self.if_stmt(s, indent, header_prefix)
        elif isinstance(s, (A.While, A.For)):
            head = header_prefix + self.join(s.first, s.body.first - 1, indent)
            self.body(s.body, head, indent)
            if isinstance(s.body, A.Block):
                self.emit(indent, "}")
        else:
            self.emit(indent, header_prefix + self.join(s.first, s.last, indent))

    def body(self, body: A.Stmt, head: str, indent: str) -> None:
        """Emit a loop/if header with its body; a block body is left open."""
        if isinstance(body, A.Block):
            self.open_brace(head, body.first, indent)
            self.block_body(body, indent)
        else:
            self.emit(indent, head)
            self.stmt(body, indent + INDENT)

    def if_stmt(self, s: A.If, indent: str, prefix: str) -> None:
        head = prefix + self.join(s.first, s.cond.last + 1, indent)
        self.body(s.then, head, indent)
        if s.orelse is None:
            if isinstance(s.then, A.Block):
                self.emit(indent, "}")
            return
        else_tok = s.then.last + 1
        braced = isinstance(s.then, A.Block)
        if self.ast.trivia.get(else_tok):
            self.trivia_lines(else_tok, indent + INDENT if braced else indent)
        lead = "} else" if braced else "else"
        if isinstance(s.orelse, A.If) and not self.ast.trivia.get(s.orelse.first):
            self.if_stmt(s.orelse, indent, lead + " ")
        elif isinstance(s.orelse, A.Block):
            self.open_brace(lead, s.orelse.first, indent)
            self.block_body(s.orelse, indent)
            self.emit(indent, "}")
        else:
            self.emit(indent, lead)
            self.stmt(s.orelse, indent + INDENT)

    # -- top level -----------------------------------------------------------
    def unit(self) -> str:
        for k, item in enumerate(self.ast.items):
            is_fn = isinstance(item, A.FunctionDef)
            prev_fn = k > 0 and isinstance(self.ast.items[k - 1], A.FunctionDef)
            if k > 0 and (is_fn or prev_fn):
                self.lines.append("")
            self.trivia_lines(item.first, "")
            if is_fn:
                head = self.join(item.first, item.body.first - 1, "")
                self.open_brace(head, item.body.first, "")
                self.block_body(item.body, "")
                self.emit("", "}")
            else:
                self.emit("", self.join(item.first, item.last, ""))
        self.trivia_lines(len(self.toks), "")
        return "\n".join(line.rstrip() for line in self.lines) + "\n"


def normalize_formatting(source: str) -> str:
    """Re-indent ``source`` with the fixed house style.

    Raises :class:`~viperkit.frontend.lexer.CSyntaxError` if it does not parse.
    """
    return _Printer(parse(source)).unit()


def pretty(ast: A.Ast) -> str:
    return _Printer(ast).unit()
