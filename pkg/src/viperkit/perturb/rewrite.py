"""Token-exact rewriting helpers shared by the recipes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from ..cpg.builder import strip
from ..cpg.consts import UNKNOWN, ConstEvaluator
from ..frontend import ast as A
from ..frontend.edits import ReplaceSpan


class RewriteError(Exception):
    pass


# -- statement placement ---------------------------------------------------------

class StatementIndex:
    """Where each statement of a function lives: in a block, as an unbraced
    body, or as a for-loop header part."""

    def __init__(self, fn: A.FunctionDef):
        self.role: dict[int, tuple[str, A.Node]] = {}
        self._visit_block(fn.body)

    def _visit_block(self, block: A.Block) -> None:
        for s in block.stmts:
            self.role[s.id] = ("block", block)
            self._visit(s)

    def _body(self, s: A.Stmt, parent: A.Node) -> None:
        if isinstance(s, A.Block):
            self.role[s.id] = ("block-body", parent)
            self._visit_block(s)
        else:
            self.role[s.id] = ("body", parent)
            self._visit(s)

    def _visit(self, s: A.Stmt) -> None:
        if isinstance(s, A.Block):
            self._visit_block(s)
        elif isinstance(s, A.If):
            self._body(s.then, s)
            if s.orelse is not None:
                self._body(s.orelse, s)
        elif isinstance(s, A.While):
            self._body(s.body, s)
        elif isinstance(s, A.For):
            if s.init is not None:
                self.role[s.init.id] = ("header", s)
            self._body(s.body, s)

    def placeable(self, s: A.Node) -> tuple[A.Node, str]:
        """Nearest statement at or above ``s`` that new code can precede."""
        while True:
            role, parent = self.role.get(s.id, ("header", None))
            if role in ("block", "body"):
                return s, role
            if parent is None:
                raise RewriteError("statement has no insertion point")
            s = parent


def _line_prefix(source: str, offset: int) -> tuple[str, bool]:
    """Indentation before ``offset`` and whether only whitespace precedes it."""
    start = source.rfind("\n", 0, offset) + 1
    head = source[start:offset]
    return head, head.strip() == ""


def leading_offset(ast: A.Ast, node: A.Node) -> int:
    """Start of ``node`` including comments attached just above it."""
    trivia = ast.trivia.get(node.first, ())
    comments = [t for t in trivia if t.kind == "comment"]
    if comments:
        return comments[0].start
    return ast.tokens[node.first].start


def insert_before(ast: A.Ast, index: StatementIndex, stmt: A.Node, text: str) -> ReplaceSpan:
    """Edit that runs ``text`` (a statement) right before ``stmt``."""
    target, role = index.placeable(stmt)
    if role == "body":
        span = ast.span(target)
        return ReplaceSpan(span.start, span.end, "{ " + text + " " + ast.text(target) + " }")
    at = leading_offset(ast, target)
    indent, alone = _line_prefix(ast.source, at)
    if alone:
        start = at - len(indent)
        return ReplaceSpan(start, start, indent + text + "\n")
    return ReplaceSpan(at, at, text + " ")


def replace_node(ast: A.Ast, node: A.Node, text: str) -> ReplaceSpan:
    span = ast.span(node)
    return ReplaceSpan(span.start, span.end, text)


def replace_token(ast: A.Ast, tok: int, text: str) -> ReplaceSpan:
    t = ast.tokens[tok]
    return ReplaceSpan(t.start, t.end, text)


def needs_parens(e: A.Expr) -> bool:
    e0 = e
    while isinstance(e0, A.Cast):
        e0 = e0.expr
    return isinstance(e0, A.Assign) or (isinstance(e0, A.Binary) and e0.op == "||")


def conjoin(ast: A.Ast, cond: A.Expr, guard: str) -> ReplaceSpan:
    text = ast.text(cond)
    if needs_parens(cond):
        text = "(" + text + ")"
    return replace_node(ast, cond, f"{guard} && {text}")


def wrap_in_if(ast: A.Ast, index: StatementIndex, stmt: A.Node, guard: str) -> ReplaceSpan:
    target, role = index.placeable(stmt)
    if isinstance(target, A.Decl):
        raise RewriteError("cannot guard a declaration without changing its scope")
    text = f"if ({guard}) {ast.text(target)}"
    if role == "body":
        text = "{ " + text + " }"
    return replace_node(ast, target, text)


# -- quantities ------------------------------------------------------------------

@dataclass(frozen=True)
class Quantity:
    """A byte amount written in the source, and how to write a new one.

    ``unit`` is the byte size of one step of ``span_node``'s value. When
    ``flexible`` the whole ``whole`` expression may instead become a plain byte
    literal, so any byte value is reachable.
    """
    value: int
    unit: int
    steps: int
    span_node: A.Node
    whole: A.Node
    flexible: bool
    render: Callable[[int], str] = str
    minimum: int = 0

    def set(self, ast: A.Ast, target: int, mode: str) -> tuple[ReplaceSpan, int]:
        """Rewrite to ``target`` bytes, rounding by ``mode`` (floor/ceil/exact)
        when the unit does not divide it. Returns the edit and the new value."""
        if target % self.unit == 0:
            steps = target // self.unit
        elif self.flexible:
            if target < self.minimum:
                raise RewriteError(f"{target} below minimum {self.minimum}")
            return replace_node(ast, self.whole, str(target)), target
        elif mode == "floor":
            steps = target // self.unit
        elif mode == "ceil":
            steps = -(-target // self.unit)
        else:
            raise RewriteError(f"{target} bytes is not a multiple of {self.unit}")
        if steps * self.unit < self.minimum:
            raise RewriteError(f"{steps * self.unit} below minimum {self.minimum}")
        return replace_node(ast, self.span_node, self.render(steps)), steps * self.unit


def _string_render(wide: bool) -> Callable[[int], str]:
    prefix = "L" if wide else ""
    return lambda steps: prefix + '"' + "A" * max(steps - 1, 0) + '"'


def byte_expr_quantity(expr: A.Expr, consts: ConstEvaluator, minimum: int = 0) -> Quantity:
    """Quantity for an argument that counts bytes (``n`` or a malloc size)."""
    total = consts.eval(expr)
    if total is UNKNOWN:
        raise RewriteError("byte count does not fold to a constant")
    e = expr
    while isinstance(e, A.Paren):
        e = e.expr
    if isinstance(e, A.Binary) and e.op == "*":
        for k, s in ((e.left, e.right), (e.right, e.left)):
            if isinstance(strip(s), (A.SizeofType, A.SizeofExpr)):
                unit, steps = consts.eval(s), consts.eval(k)
                if unit is not UNKNOWN and steps is not UNKNOWN and unit > 0:
                    return Quantity(total, unit, steps, k, expr, True, minimum=minimum)
    return Quantity(total, 1, total, expr, expr, True, minimum=minimum)


def unit_expr_quantity(expr: A.Expr, unit: int, consts: ConstEvaluator, minimum: int = 0) -> Quantity:
    """Quantity for an expression that counts elements of ``unit`` bytes."""
    steps = consts.eval(expr)
    if steps is UNKNOWN or unit is UNKNOWN:
        raise RewriteError("element count does not fold to a constant")
    return Quantity(steps * unit, unit, steps, expr, expr, False, minimum=minimum)


def string_quantity(lit: A.StrLit, unit: int) -> Quantity:
    """Quantity carried by a string literal's length (terminator included)."""
    return Quantity((lit.length + 1) * unit, unit, lit.length + 1, lit, lit, False,
                    _string_render(lit.wide), minimum=unit)
