"""AST node types for the C subset.

Every node records the indices of its first and last significant token in
``Ast.tokens``; spans and source slices are derived from those.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Union

from .lexer import Token


class Span(NamedTuple):
    start_line: int
    start_col: int
    end_line: int
    end_col: int
    start: int
    end: int

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end


@dataclass(frozen=True)
class Node:
    id: int
    first: int
    last: int

    def children(self) -> Iterator["Node"]:
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if isinstance(value, Node):
                yield value
            elif isinstance(value, tuple):
                for v in value:
                    if isinstance(v, Node):
                        yield v

    def walk(self) -> Iterator["Node"]:
        yield self
        for child in self.children():
            yield from child.walk()


# -- types -----------------------------------------------------------------

@dataclass(frozen=True)
class TypeSpec(Node):
    words: tuple[str, ...]
    pointer: int = 0

    @property
    def base(self) -> str:
        skip = {"const", "static", "extern", "volatile", "register", "signed"}
        words = [w for w in self.words if w not in skip]
        words = [w for w in words if w != "unsigned"]
        for w in ("char", "short", "long", "double"):
            if w in words:
                return w
        return words[-1] if words else "int"


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class Ident(Node):
    name: str


@dataclass(frozen=True)
class IntLit(Node):
    value: int


@dataclass(frozen=True)
class CharLit(Node):
    value: int
    wide: bool = False


@dataclass(frozen=True)
class StrLit(Node):
    length: int
    wide: bool = False


@dataclass(frozen=True)
class Paren(Node):
    expr: "Expr"


@dataclass(frozen=True)
class Unary(Node):
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Postfix(Node):
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary(Node):
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Assign(Node):
    op: str
    target: "Expr"
    value: "Expr"


@dataclass(frozen=True)
class Call(Node):
    callee: str
    callee_tok: int
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Index(Node):
    base: "Expr"
    index: "Expr"


@dataclass(frozen=True)
class SizeofType(Node):
    type: TypeSpec


@dataclass(frozen=True)
class SizeofExpr(Node):
    expr: "Expr"


@dataclass(frozen=True)
class Cast(Node):
    type: TypeSpec
    expr: "Expr"


Expr = Union[Ident, IntLit, CharLit, StrLit, Paren, Unary, Postfix, Binary,
             Assign, Call, Index, SizeofType, SizeofExpr, Cast]


# -- statements -------------------------------------------------------------

@dataclass(frozen=True)
class Decl(Node):
    type: TypeSpec
    name: str
    name_tok: int
    is_array: bool = False
    array: Optional[Expr] = None
    init: Optional[Expr] = None


@dataclass(frozen=True)
class ExprStmt(Node):
    expr: Expr


@dataclass(frozen=True)
class Empty(Node):
    pass


@dataclass(frozen=True)
class Return(Node):
    value: Optional[Expr] = None


@dataclass(frozen=True)
class Block(Node):
    stmts: tuple["Stmt", ...] = ()


@dataclass(frozen=True)
class If(Node):
    cond: Expr
    then: "Stmt"
    orelse: Optional["Stmt"] = None


@dataclass(frozen=True)
class While(Node):
    cond: Expr
    body: "Stmt"


@dataclass(frozen=True)
class For(Node):
    init: Optional[Union[Decl, ExprStmt]]
    cond: Expr
    step: Optional[Expr]
    body: "Stmt"


Stmt = Union[Decl, ExprStmt, Empty, Return, Block, If, While, For]
SIMPLE_STMTS = (Decl, ExprStmt, Return)


# -- top level ----------------------------------------------------------------

@dataclass(frozen=True)
class Param(Node):
    type: TypeSpec
    name: Optional[str]
    is_array: bool = False


@dataclass(frozen=True)
class FunctionDef(Node):
    ret: TypeSpec
    name: str
    params: tuple[Param, ...]
    body: Block


@dataclass(frozen=True)
class Prototype(Node):
    ret: TypeSpec
    name: str
    params: tuple[Param, ...]


@dataclass(frozen=True)
class GlobalDecl(Node):
    decl: Decl


@dataclass(frozen=True)
class Typedef(Node):
    type: TypeSpec
    name: str


TopLevel = Union[FunctionDef, Prototype, GlobalDecl, Typedef]


@dataclass(frozen=True)
class Ast:
    """A parsed translation unit.

    ``tokens`` holds only significant tokens; ``trivia[i]`` lists the comments
    and directives that precede significant token ``i`` (index
    ``len(tokens)`` collects whatever trails the last token).
    """
    source: str
    tokens: tuple[Token, ...]
    trivia: dict[int, tuple[Token, ...]]
    items: tuple[TopLevel, ...]
    defines: dict[str, str] = field(default_factory=dict)
    typedefs: dict[str, TypeSpec] = field(default_factory=dict)

    @property
    def functions(self) -> list[FunctionDef]:
        return [it for it in self.items if isinstance(it, FunctionDef)]

    def function(self, name: str) -> FunctionDef:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(name)

    def span(self, node: Node) -> Span:
        a, b = self.tokens[node.first], self.tokens[node.last]
        return Span(a.line, a.col, b.end_line, b.end_col, a.start, b.end)

    def text(self, node: Node) -> str:
        a, b = self.tokens[node.first], self.tokens[node.last]
        return self.source[a.start:b.end]

    def line(self, node: Node) -> int:
        return self.tokens[node.first].line

    def node_tokens(self, node: Node) -> list[str]:
        return [t.text for t in self.tokens[node.first:node.last + 1]]

    def walk(self) -> Iterator[Node]:
        for item in self.items:
            yield from item.walk()
