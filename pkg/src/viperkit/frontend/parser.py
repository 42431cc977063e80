"""Recursive-descent parser for the supported C subset.

Supported: declarations with a single declarator (scalars, pointers, one
array dimension), typedef pass-through, assignments (plain, compound,
``++``/``--``), calls, if/else, for, while, return, blocks, sizeof, casts
and integer/char/string literals. The preprocessor is limited to
``#include`` (ignored) and object-like ``#define``.

Everything else (goto, switch, do, break/continue, struct/union/enum,
member access, the ternary and bitwise operators, function pointers,
multiple declarators) raises :class:`CSyntaxError`.
"""
from __future__ import annotations

import re
from typing import Optional

from . import ast as A
from .lexer import BUILTIN_TYPES, CSyntaxError, Token, char_literal_value, \
    int_literal_value, string_literal_length, tokenize

TYPE_WORDS = frozenset({"void", "char", "short", "int", "long", "float", "double",
                        "signed", "unsigned", "const", "static", "extern",
                        "volatile", "register"})
REJECTED_KEYWORDS = frozenset({"goto", "switch", "case", "default", "do", "break",
                               "continue", "struct", "union", "enum"})
ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%="})
REJECTED_OPS = frozenset({"?", "->", ".", "|", "^", "<<", ">>", "<<=", ">>=",
                          "&=", "|=", "^=", "...", "~"})

_BINARY_LEVELS = (
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
)

_DEFINE = re.compile(r"#\s*define\s+([A-Za-z_][A-Za-z0-9_]*)(\(?)(.*)$", re.S)
_INCLUDE = re.compile(r"#\s*include\b")


class _Parser:
    def __init__(self, source: str, tokens: list[Token], typedefs=None, first_id=0):
        self.source = source
        self.toks = tokens
        self.p = 0
        self.next_id = first_id
        self.typedefs: dict[str, A.TypeSpec] = dict(typedefs or {})

    # -- helpers ---------------------------------------------------------
    def _id(self) -> int:
        self.next_id += 1
        return self.next_id

    def peek(self, k: int = 0) -> Optional[Token]:
        i = self.p + k
        return self.toks[i] if i < len(self.toks) else None

    def at(self, text: str) -> bool:
        t = self.peek()
        return t is not None and t.text == text and t.kind in ("punct", "keyword")

    def error(self, message: str, tok: Optional[Token] = None) -> CSyntaxError:
        tok = tok or self.peek() or (self.toks[-1] if self.toks else None)
        return CSyntaxError(tok.line if tok else 1, message)

    def expect(self, text: str) -> int:
        t = self.peek()
        if t is None or t.text != text:
            found = t.text if t else "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        self.p += 1
        return self.p - 1

    def ident(self) -> int:
        t = self.peek()
        if t is None or t.kind != "ident":
            raise self.error("expected identifier")
        self.p += 1
        return self.p - 1

    def starts_type(self, k: int = 0) -> bool:
        t = self.peek(k)
        if t is None:
            return False
        if t.kind == "keyword":
            if t.text in ("struct", "union", "enum"):
                raise self.error(f"unsupported construct: {t.text}", t)
            return t.text in TYPE_WORDS
        return t.kind == "ident" and (t.text in BUILTIN_TYPES or t.text in self.typedefs)

    # -- types -----------------------------------------------------------
    def typespec(self) -> A.TypeSpec:
        first = self.p
        words = []
        while self.starts_type():
            t = self.peek()
            words.append(t.text)
            self.p += 1
            # a typedef name or builtin ends the specifier list
            if t.kind == "ident":
                while self.peek() is not None and self.peek().text in ("const", "volatile"):
                    self.p += 1
                break
        if not words:
            raise self.error("expected type")
        pointer = 0
        while self.at("*") or self.at("const"):
            if self.at("*"):
                pointer += 1
            self.p += 1
        return A.TypeSpec(self._id(), first, self.p - 1, tuple(words), pointer)

    # -- top level -------------------------------------------------------
    def translation_unit(self) -> list[A.TopLevel]:
        items = []
        while self.peek() is not None:
            items.append(self.top_level())
        return items

    def top_level(self) -> A.TopLevel:
        first = self.p
        t = self.peek()
        if t.kind == "keyword" and t.text in REJECTED_KEYWORDS:
            raise self.error(f"unsupported construct: {t.text}")
        if self.at("typedef"):
            self.p += 1
            ts = self.typespec()
            name_i = self.ident()
            last = self.expect(";")
            name = self.toks[name_i].text
            node = A.Typedef(self._id(), first, last, ts, name)
            self.typedefs[name] = ts
            return node
        ts = self.typespec()
        name_i = self.ident()
        name = self.toks[name_i].text
        if self.at("("):
            params = self.params()
            if self.at("{"):
                body = self.block()
                return A.FunctionDef(self._id(), first, body.last, ts, name, params, body)
            last = self.expect(";")
            return A.Prototype(self._id(), first, last, ts, name, params)
        decl = self.declarator_rest(first, ts, name_i)
        return A.GlobalDecl(self._id(), first, decl.last, decl)

    def params(self) -> tuple[A.Param, ...]:
        self.expect("(")
        out = []
        if self.at(")"):
            self.p += 1
            return ()
        if self.at("void") and self.peek(1) is not None and self.peek(1).text == ")":
            self.p += 2
            return ()
        while True:
            first = self.p
            if self.at("..."):
                raise self.error("unsupported construct: variadic parameters")
            if self.at("("):
                raise self.error("unsupported construct: function pointer")
            ts = self.typespec()
            name = None
            if self.at("("):
                raise self.error("unsupported construct: function pointer")
            if self.peek() is not None and self.peek().kind == "ident":
                name = self.toks[self.ident()].text
            is_array = False
            if self.at("["):
                self.p += 1
                self.expect("]")
                is_array = True
            out.append(A.Param(self._id(), first, self.p - 1, ts, name, is_array))
            if self.at(","):
                self.p += 1
                continue
            self.expect(")")
            return tuple(out)

    # -- statements ----------------------------------------------------------
    def block(self) -> A.Block:
        first = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek() is None:
                raise self.error("unterminated block")
            stmts.append(self.statement())
        last = self.expect("}")
        return A.Block(self._id(), first, last, tuple(stmts))

    def statement(self) -> A.Stmt:
        t = self.peek()
        if t.kind == "keyword" and t.text in REJECTED_KEYWORDS:
            raise self.error(f"unsupported construct: {t.text}")
        if t.kind == "keyword" and t.text == "typedef":
            raise self.error("unsupported construct: local typedef")
        first = self.p
        if self.at("{"):
            return self.block()
        if self.at(";"):
            self.p += 1
            return A.Empty(self._id(), first, first)
        if self.at("if"):
            self.p += 1
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            then = self.statement()
            orelse = None
            if self.at("else"):
                self.p += 1
                orelse = self.statement()
            last = (orelse or then).last
            return A.If(self._id(), first, last, cond, then, orelse)
        if self.at("while"):
            self.p += 1
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            body = self.statement()
            return A.While(self._id(), first, body.last, cond, body)
        if self.at("for"):
            self.p += 1
            self.expect("(")
            init: Optional[A.Stmt] = None
            if self.at(";"):
                self.p += 1
            elif self.starts_type():
                init = self.declaration()
            else:
                s = self.p
                e = self.expression()
                last = self.expect(";")
                init = A.ExprStmt(self._id(), s, last, e)
            if self.at(";"):
                raise self.error("unsupported construct: for loop without condition")
            cond = self.expression()
            self.expect(";")
            step = None if self.at(")") else self.expression()
            self.expect(")")
            body = self.statement()
            return A.For(self._id(), first, body.last, init, cond, step, body)
        if self.at("return"):
            self.p += 1
            value = None if self.at(";") else self.expression()
            last = self.expect(";")
            return A.Return(self._id(), first, last, value)
        if self.starts_type():
            return self.declaration()
        e = self.expression()
        last = self.expect(";")
        return A.ExprStmt(self._id(), first, last, e)

    def declaration(self) -> A.Decl:
        first = self.p
        ts = self.typespec()
        if self.at("("):
            raise self.error("unsupported construct: function pointer")
        name_i = self.ident()
        return self.declarator_rest(first, ts, name_i)

    def declarator_rest(self, first: int, ts: A.TypeSpec, name_i: int) -> A.Decl:
        is_array, array, init = False, None, None
        if self.at("["):
            self.p += 1
            is_array = True
            if not self.at("]"):
                array = self.expression()
            self.expect("]")
            if self.at("["):
                raise self.error("unsupported construct: multi-dimensional array")
        if self.at("="):
            self.p += 1
            if self.at("{"):
                raise self.error("unsupported construct: initializer list")
            init = self.assignment()
        if self.at(","):
            raise self.error("unsupported construct: multiple declarators")
        last = self.expect(";")
        if is_array and array is None and not isinstance(init, A.StrLit):
            raise self.error("array without size needs a string initializer")
        return A.Decl(self._id(), first, last, ts, self.toks[name_i].text, name_i,
                      is_array, array, init)

    # -- expressions ---------------------------------------------------------
    def expression(self) -> A.Expr:
        e = self.assignment()
        if self.at(","):
            raise self.error("unsupported construct: comma operator")
        return e

    def assignment(self) -> A.Expr:
        first = self.p
        left = self.binary(0)
        t = self.peek()
        if t is not None and t.kind == "punct" and t.text in ASSIGN_OPS:
            if not isinstance(left, (A.Ident, A.Index, A.Unary, A.Paren)):
                raise self.error("invalid assignment target", t)
            self.p += 1
            value = self.assignment()
            return A.Assign(self._id(), first, value.last, t.text, left, value)
        if t is not None and t.kind == "punct" and t.text in REJECTED_OPS:
            raise self.error(f"unsupported operator {t.text!r}", t)
        return left

    def binary(self, level: int) -> A.Expr:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        first = self.p
        left = self.binary(level + 1)
        ops = _BINARY_LEVELS[level]
        while True:
            t = self.peek()
            if t is None or t.kind != "punct" or t.text not in ops:
                break
            self.p += 1
            right = self.binary(level + 1)
            left = A.Binary(self._id(), first, right.last, t.text, left, right)
        if level == 0:
            t = self.peek()
            if t is not None and t.kind == "punct" and (t.text in REJECTED_OPS or t.text == "&"):
                raise self.error(f"unsupported operator {t.text!r}", t)
        return left

    def unary(self) -> A.Expr:
        first = self.p
        t = self.peek()
        if t is None:
            raise self.error("unexpected end of input")
        if t.kind == "punct" and t.text in ("-", "+", "!", "*", "&"):
            self.p += 1
            operand = self.unary()
            return A.Unary(self._id(), first, operand.last, t.text, operand)
        if t.kind == "punct" and t.text in ("++", "--"):
            self.p += 1
            operand = self.unary()
            return A.Unary(self._id(), first, operand.last, t.text, operand)
        if t.kind == "punct" and t.text == "~":
            raise self.error("unsupported operator '~'")
        if t.kind == "keyword" and t.text == "sizeof":
            self.p += 1
            if self.at("(") and self.starts_type(1):
                self.p += 1
                ts = self.typespec()
                last = self.expect(")")
                return A.SizeofType(self._id(), first, last, ts)
            operand = self.unary()
            return A.SizeofExpr(self._id(), first, operand.last, operand)
        if self.at("(") and self.starts_type(1):
            self.p += 1
            ts = self.typespec()
            self.expect(")")
            operand = self.unary()
            return A.Cast(self._id(), first, operand.last, ts, operand)
        return self.postfix()

    def postfix(self) -> A.Expr:
        first = self.p
        e = self.primary()
        while True:
            if self.at("("):
                if not isinstance(e, A.Ident):
                    raise self.error("unsupported construct: indirect call")
                self.p += 1
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.assignment())
                        if self.at(","):
                            self.p += 1
                            continue
                        break
                last = self.expect(")")
                e = A.Call(self._id(), first, last, e.name, e.first, tuple(args))
            elif self.at("["):
                self.p += 1
                idx = self.expression()
                last = self.expect("]")
                e = A.Index(self._id(), first, last, e, idx)
            elif self.at("++") or self.at("--"):
                op = self.peek().text
                last = self.p
                self.p += 1
                e = A.Postfix(self._id(), first, last, op, e)
            elif self.at("->") or self.at("."):
                raise self.error("unsupported construct: member access")
            else:
                return e

    def primary(self) -> A.Expr:
        t = self.peek()
        if t is None:
            raise self.error("unexpected end of input")
        i = self.p
        if t.kind == "ident":
            self.p += 1
            return A.Ident(self._id(), i, i, t.text)
        if t.kind == "int":
            self.p += 1
            return A.IntLit(self._id(), i, i, int_literal_value(t.text))
        if t.kind == "char":
            self.p += 1
            return A.CharLit(self._id(), i, i, char_literal_value(t.text), t.text.startswith("L"))
        if t.kind == "string":
            wide = t.text.startswith("L")
            length = 0
            while self.peek() is not None and self.peek().kind == "string":
                length += string_literal_length(self.peek().text)
                self.p += 1
            return A.StrLit(self._id(), i, self.p - 1, length, wide)
        if self.at("("):
            self.p += 1
            e = self.expression()
            last = self.expect(")")
            return A.Paren(self._id(), i, last, e)
        if t.kind == "keyword" and t.text in REJECTED_KEYWORDS:
            raise self.error(f"unsupported construct: {t.text}")
        raise self.error(f"unexpected token {t.text!r}")


def _directives(trivia: list[Token]) -> dict[str, str]:
    defines: dict[str, str] = {}
    for tok in trivia:
        if tok.kind != "directive":
            continue
        text = tok.text
        if _INCLUDE.match(text):
            continue
        m = _DEFINE.match(text)
        if not m:
            raise CSyntaxError(tok.line, f"unsupported preprocessor directive: {text.split()[0]}")
        if m.group(2):
            raise CSyntaxError(tok.line, "unsupported construct: function-like macro")
        defines[m.group(1)] = m.group(3).strip()
    return defines


def split_trivia(tokens: list[Token]) -> tuple[list[Token], dict[int, tuple[Token, ...]]]:
    sig: list[Token] = []
    trivia: dict[int, tuple[Token, ...]] = {}
    pending: list[Token] = []
    for t in tokens:
        if t.is_trivia:
            pending.append(t)
        else:
            if pending:
                trivia[len(sig)] = tuple(pending)
                pending = []
            sig.append(t)
    if pending:
        trivia[len(sig)] = tuple(pending)
    return sig, trivia


def parse(source: str) -> A.Ast:
    """Parse ``source`` into an :class:`~viperkit.frontend.ast.Ast`.

    Raises :class:`CSyntaxError` for anything outside the subset.
    """
    all_tokens = tokenize(source)
    sig, trivia = split_trivia(all_tokens)
    defines = _directives([t for t in all_tokens if t.kind == "directive"])
    parser = _Parser(source, sig)
    items = parser.translation_unit()
    return A.Ast(source, tuple(sig), trivia, tuple(items), defines, parser.typedefs)


def parse_expression(text: str) -> tuple[A.Expr, list[Token]]:
    """Parse a standalone expression (used for ``#define`` bodies)."""
    sig, _ = split_trivia(tokenize(text))
    if not sig:
        raise CSyntaxError(1, "empty expression")
    parser = _Parser(text, sig)
    e = parser.expression()
    if parser.peek() is not None:
        raise parser.error("trailing tokens in expression")
    return e, sig
