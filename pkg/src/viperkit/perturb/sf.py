"""Spurious-feature perturbations: node set, edge set, identifiers, layout."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..cpg.apis import LIBRARY_NAMES
from ..frontend import ast as A
from ..frontend.edits import ReplaceSpan, apply_edits, line_map
from ..frontend.formatting import normalize_formatting
from ..frontend.lexer import BUILTIN_TYPES, tokenize
from ..frontend.parser import parse
from ..frontend.sample import CodeSample
from .rewrite import leading_offset
from .variant import PerturbedVariant, VariantKind, remap_lines, variant_id

NODE_SET_STMT = 'printf("");'
SYMBOLIC = re.compile(r"(VAR|FUN)[1-9][0-9]*\Z")


def _is_void(fn: A.FunctionDef) -> bool:
    return fn.ret.pointer == 0 and fn.ret.base == "void"


def _function_start(ast: A.Ast, fn: A.FunctionDef, text: str) -> ReplaceSpan:
    """Insertion of ``text`` as the first statement of ``fn``."""
    toks = ast.tokens
    lbrace = toks[fn.body.first]
    src = ast.source
    if fn.body.stmts:
        first = fn.body.stmts[0]
        at = leading_offset(ast, first)
        line_start = src.rfind("\n", 0, at) + 1
        indent = src[line_start:at]
        if line_start > lbrace.start and indent.strip() == "":
            return ReplaceSpan(line_start, line_start, indent + text + "\n")
        return ReplaceSpan(lbrace.end, lbrace.end, " " + text)
    rbrace = toks[fn.body.last]
    if rbrace.line > lbrace.line:
        line_start = src.rfind("\n", 0, lbrace.start) + 1
        outer = src[line_start:lbrace.start]
        outer = outer[:len(outer) - len(outer.lstrip())]
        return ReplaceSpan(lbrace.end, lbrace.end, "\n" + outer + "    " + text)
    return ReplaceSpan(lbrace.end, lbrace.end, " " + text + " ")


def _insert_each_function(sample: CodeSample, kind: VariantKind, text_for) -> PerturbedVariant:
    ast = parse(sample.source)
    edits = [_function_start(ast, fn, text_for(fn)) for fn in ast.functions]
    source = apply_edits(sample.source, edits)
    mapping = line_map(sample.source, edits)
    return PerturbedVariant(
        variant_id=variant_id(sample.sample_id, None, kind, 1), sample_id=sample.sample_id,
        kind=kind, feature=None, source=source, expected_label=sample.label,
        recipe=f"{kind.value}: {text_for.__doc__} at the start of {len(edits)} function(s)",
        vulnerable_lines=remap_lines(sample.vulnerable_lines, mapping),
        noop=not edits, line_mapping=mapping)


def gen_sf_node_set(sample: CodeSample) -> PerturbedVariant:
    def text(fn):
        """printf("")"""
        return NODE_SET_STMT
    return _insert_each_function(sample, VariantKind.SF_NODE_SET, text)


def gen_sf_edge_set(sample: CodeSample) -> PerturbedVariant:
    def text(fn):
        """if(0==1) return"""
        return "if(0==1) return;" if _is_void(fn) else "if(0==1) return 0;"
    return _insert_each_function(sample, VariantKind.SF_EDGE_SET, text)


# -- identifiers ------------------------------------------------------------------

@dataclass(frozen=True)
class SymbolMap:
    """Injective renaming of user identifiers to VARk / FUNk."""
    mapping: Mapping[str, str] = field(default_factory=dict)

    def __getitem__(self, name: str) -> str:
        return self.mapping[name]

    def get(self, name: str, default: Optional[str] = None) -> Optional[str]:
        return self.mapping.get(name, default)

    def __len__(self) -> int:
        return len(self.mapping)

    def apply(self, source: str) -> str:
        edits = [ReplaceSpan(t.start, t.end, self.mapping[t.text]) for t in tokenize(source)
                 if t.kind == "ident" and t.text in self.mapping and self.mapping[t.text] != t.text]
        return apply_edits(source, edits)


def build_symbol_map(ast: A.Ast) -> SymbolMap:
    functions = {fn.name for fn in ast.functions}
    functions |= {it.name for it in ast.items if isinstance(it, A.Prototype)}
    functions |= {n.callee for n in ast.walk() if isinstance(n, A.Call)}
    keep = LIBRARY_NAMES | BUILTIN_TYPES | set(ast.typedefs) | set(ast.defines)
    reserved = {t.text for t in ast.tokens if t.kind == "ident" and SYMBOLIC.match(t.text)}
    counters = {"VAR": 0, "FUN": 0}
    mapping: dict[str, str] = {}
    for t in ast.tokens:
        name = t.text
        if t.kind != "ident" or name in mapping or name in keep:
            continue
        if name in reserved:
            mapping[name] = name
            continue
        prefix = "FUN" if name in functions else "VAR"
        while True:
            counters[prefix] += 1
            candidate = f"{prefix}{counters[prefix]}"
            if candidate not in reserved:
                break
        mapping[name] = candidate
    return SymbolMap(mapping)


def gen_sf_identifier(sample: CodeSample) -> tuple[PerturbedVariant, SymbolMap]:
    ast = parse(sample.source)
    symbols = build_symbol_map(ast)
    edits = [ReplaceSpan(t.start, t.end, symbols[t.text]) for t in ast.tokens
             if t.kind == "ident" and t.text in symbols.mapping and symbols[t.text] != t.text]
    source = apply_edits(sample.source, edits)
    mapping = line_map(sample.source, edits)
    variant = PerturbedVariant(
        variant_id=variant_id(sample.sample_id, None, VariantKind.SF_IDENTIFIER, 1),
        sample_id=sample.sample_id, kind=VariantKind.SF_IDENTIFIER, feature=None, source=source,
        expected_label=sample.label,
        recipe=f"SF_IDENTIFIER: {len(symbols)} identifier(s) symbolized",
        vulnerable_lines=remap_lines(sample.vulnerable_lines, mapping),
        noop=source == sample.source, line_mapping=mapping, symbols=dict(symbols.mapping))
    return variant, symbols


# -- formatting -------------------------------------------------------------------

def token_line_map(before: str, after: str) -> dict[int, Optional[int]]:
    """Line map between two texts with the same significant token stream:
    each line goes to the new line of its first token."""
    old = [t for t in tokenize(before) if t.kind != "comment"]
    new = [t for t in tokenize(after) if t.kind != "comment"]
    if [t.text for t in old] != [t.text for t in new]:
        raise ValueError("token streams differ")
    mapping: dict[int, Optional[int]] = {}
    for a, b in zip(old, new):
        mapping.setdefault(a.line, b.line)
    for n in range(1, before.count("\n") + 2):
        mapping.setdefault(n, None)
    return mapping


def gen_sf_formatting(sample: CodeSample) -> PerturbedVariant:
    source = normalize_formatting(sample.source)
    mapping = token_line_map(sample.source, source)
    return PerturbedVariant(
        variant_id=variant_id(sample.sample_id, None, VariantKind.SF_FORMATTING, 1),
        sample_id=sample.sample_id, kind=VariantKind.SF_FORMATTING, feature=None, source=source,
        expected_label=sample.label, recipe="SF_FORMATTING: auto-indent",
        vulnerable_lines=remap_lines(sample.vulnerable_lines, mapping),
        noop=source == sample.source, line_mapping=mapping)


def gen_sf_all(sample: CodeSample) -> list[PerturbedVariant]:
    return [gen_sf_node_set(sample), gen_sf_edge_set(sample),
            gen_sf_identifier(sample)[0], gen_sf_formatting(sample)]
