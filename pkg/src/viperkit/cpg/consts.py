"""Compile-time constant folding under a fixed sizeof model."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from ..frontend import ast as A
from ..frontend.lexer import CSyntaxError


class _Unknown:
    """Absorbing value for anything that cannot be folded."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNKNOWN"

    def __reduce__(self):
        return (_Unknown, ())

    def _absorb(self, *_):
        return self

    __add__ = __radd__ = __sub__ = __rsub__ = __mul__ = __rmul__ = _absorb
    __floordiv__ = __rfloordiv__ = __mod__ = __rmod__ = __neg__ = _absorb


UNKNOWN = _Unknown()
ConstValue = Union[int, _Unknown]

LP64 = {
    "char": 1, "short": 2, "int": 4, "long": 8, "float": 4, "double": 8,
    "wchar_t": 4, "size_t": 8, "ssize_t": 8, "void": 1,
    "int8_t": 1, "uint8_t": 1, "int16_t": 2, "uint16_t": 2,
    "int32_t": 4, "uint32_t": 4, "int64_t": 8, "uint64_t": 8,
}


@dataclass(frozen=True)
class SizeofModel:
    sizes: Mapping[str, int] = field(default_factory=lambda: dict(LP64))
    pointer: int = 8

    def with_overrides(self, overrides: Mapping[str, int]) -> "SizeofModel":
        sizes = dict(self.sizes)
        pointer = self.pointer
        for k, v in overrides.items():
            if k == "pointer":
                pointer = int(v)
            else:
                sizes[k] = int(v)
        return SizeofModel(sizes, pointer)

    def of_type(self, ts: A.TypeSpec, typedefs: Optional[Mapping[str, A.TypeSpec]] = None,
                _depth: int = 0) -> ConstValue:
        if ts.pointer:
            return self.pointer
        base = ts.base
        if base in self.sizes:
            return self.sizes[base]
        if typedefs and base in typedefs and _depth < 16:
            return self.of_type(typedefs[base], typedefs, _depth + 1)
        return UNKNOWN

    @property
    def wchar(self) -> int:
        return self.sizes["wchar_t"]


DEFAULT_SIZEOF = SizeofModel()


def c_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def c_mod(a: int, b: int) -> int:
    return a - b * c_div(a, b)


@dataclass(frozen=True)
class VarInfo:
    """Declared shape of a local, used to fold ``sizeof(var)``."""
    type: A.TypeSpec
    is_array: bool = False
    count: ConstValue = UNKNOWN


class ConstEvaluator:
    def __init__(self, defines: Optional[Mapping[str, str]] = None,
                 sizes: SizeofModel = DEFAULT_SIZEOF,
                 typedefs: Optional[Mapping[str, A.TypeSpec]] = None,
                 env: Optional[Mapping[str, VarInfo]] = None):
        self.defines = defines or {}
        self.sizes = sizes
        self.typedefs = typedefs or {}
        self.env = env or {}
        self._define_cache: dict[str, ConstValue] = {}
        self._active: set[str] = set()

    def var_size(self, name: str) -> ConstValue:
        info = self.env.get(name)
        if info is None:
            return UNKNOWN
        elem = self.sizes.of_type(info.type, self.typedefs)
        if not info.is_array:
            return elem
        return info.count * elem

    def _define(self, name: str) -> ConstValue:
        if name in self._define_cache:
            return self._define_cache[name]
        if name in self._active:
            return UNKNOWN
        from ..frontend.parser import parse_expression
        self._active.add(name)
        try:
            expr, _ = parse_expression(self.defines[name])
            value = self.eval(expr)
        except CSyntaxError:
            value = UNKNOWN
        finally:
            self._active.discard(name)
        self._define_cache[name] = value
        return value

    def eval(self, e: A.Expr) -> ConstValue:
        if isinstance(e, A.IntLit):
            return e.value
        if isinstance(e, A.CharLit):
            return e.value
        if isinstance(e, (A.Paren,)):
            return self.eval(e.expr)
        if isinstance(e, A.Cast):
            if e.type.pointer:
                return UNKNOWN
            return self.eval(e.expr)
        if isinstance(e, A.Ident):
            if e.name in self.defines:
                return self._define(e.name)
            return UNKNOWN
        if isinstance(e, A.SizeofType):
            return self.sizes.of_type(e.type, self.typedefs)
        if isinstance(e, A.SizeofExpr):
            inner = e.expr
            while isinstance(inner, A.Paren):
                inner = inner.expr
            if isinstance(inner, A.Ident):
                return self.var_size(inner.name)
            if isinstance(inner, A.StrLit):
                unit = self.sizes.wchar if inner.wide else self.sizes.sizes["char"]
                return (inner.length + 1) * unit
            return UNKNOWN
        if isinstance(e, A.Unary):
            if e.op == "-":
                return -self.eval(e.operand)
            if e.op == "+":
                return self.eval(e.operand)
            return UNKNOWN
        if isinstance(e, A.Binary) and e.op in ("+", "-", "*", "/", "%"):
            a = self.eval(e.left)
            b = self.eval(e.right)
            if a is UNKNOWN or b is UNKNOWN:
                return UNKNOWN
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if b == 0:
                return UNKNOWN
            return c_div(a, b) if e.op == "/" else c_mod(a, b)
        return UNKNOWN


def eval_const(expr: A.Expr, defines: Optional[Mapping[str, str]] = None,
               sizes: SizeofModel = DEFAULT_SIZEOF,
               typedefs: Optional[Mapping[str, A.TypeSpec]] = None,
               env: Optional[Mapping[str, VarInfo]] = None) -> ConstValue:
    """Fold ``expr`` to an integer, or return :data:`UNKNOWN`."""
    return ConstEvaluator(defines, sizes, typedefs, env).eval(expr)
