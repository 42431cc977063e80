"""Feature-preserving and feature-eliminating rewrites for the ten rules.

Each recipe edits exact tokens found through the witness's CPG nodes:

    IBS/BSB/BO  FPP: LEN - 1, n + 1 (BSB co-edits LEN_s)   FEP: LEN <- n, n <- LEN
    OE          FPP: LEN + 1 and n + 1                      FEP: n <- LEN, LEN <- n
    DF          FPP: printf before 2nd free                 FEP: re-allocate, free(NULL)
    UAF         FPP: printf before use                      FEP: free(NULL), use -> printf
    BUW/BUR     FPP: idx > -2L conjoined                    FEP: idx >= 0, idx > -1
    RA          (none)                                      FEP: rd_stub
    WA          FPP: memcpy<->strncpy, memset<->wmemset     FEP: wr_stub

Byte targets that the written unit cannot hit exactly are rounded so the
predicate moves the intended way; for byte-counting expressions the whole
expression becomes a literal instead.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional

from ..cpg.apis import ALL_APIS
from ..cpg.consts import UNKNOWN
from ..cpg.graph import EdgeKind, NodeKind, PropertyGraph, PropertyKey as K
from ..detect.analysis import Analysis, AnnotatedSample, analyze_source
from ..detect.features import FeatureId, FeatureWitness
from ..detect.rules import buffer_definitions
from ..frontend import ast as A
from ..frontend.edits import ReplaceSpan, apply_edits, line_map
from ..frontend.sample import Label
from .rewrite import (Quantity, RewriteError, StatementIndex, byte_expr_quantity, conjoin,
                      insert_before, replace_node, replace_token, string_quantity,
                      unit_expr_quantity, wrap_in_if)
from .variant import (PerturbedVariant, UneditableWitness, VariantKind, fep_label, remap_lines,
                      variant_id)

BENIGN = 'printf("");'
READ_STUB = "rd_stub"
WRITE_STUB = "wr_stub"
CALLEE_SWAPS = {"memcpy": "strncpy", "strncpy": "memcpy", "memset": "wmemset", "wmemset": "memset"}

Edits = list[ReplaceSpan]


@dataclass
class _Context:
    analysis: Analysis
    graphs: dict[str, PropertyGraph]
    index: dict[str, StatementIndex]

    @property
    def ast(self) -> A.Ast:
        return self.analysis.ast

    @classmethod
    def of(cls, analysis: Analysis) -> "_Context":
        graphs = {g.function: g for g in analysis.graphs}
        index = {fn.name: StatementIndex(fn) for fn in analysis.ast.functions}
        return cls(analysis, graphs, index)


@dataclass(frozen=True)
class Recipe:
    kind: VariantKind
    description: str
    build: Callable[[], Edits]


# -- quantities ------------------------------------------------------------------

def buffer_quantity(ctx: _Context, g: PropertyGraph, u: int) -> Quantity:
    consts = g.consts
    if g.kind(u) is NodeKind.AD:
        d = g.stmt[u]
        elem = consts.sizes.of_type(d.type, ctx.ast.typedefs)
        if elem is UNKNOWN:
            raise RewriteError("element size unknown")
        if d.array is not None:
            return unit_expr_quantity(d.array, elem, consts, minimum=elem)
        if isinstance(d.init, A.StrLit):
            return string_quantity(d.init, elem)
        raise RewriteError("array length not written")
    call = g.call[u]
    if call.callee == "calloc":
        size = consts.eval(call.args[1])
        return unit_expr_quantity(call.args[0], size, consts, minimum=1)
    return byte_expr_quantity(call.args[0], consts, minimum=1)


def count_quantity(ctx: _Context, g: PropertyGraph, v: int) -> Quantity:
    call = g.call[v]
    role = ALL_APIS[call.callee]
    if role.count is None:
        src = call.args[1] if len(call.args) > 1 else None
        while isinstance(src, (A.Paren, A.Cast)):
            src = src.expr
        if isinstance(src, A.StrLit):
            return string_quantity(src, 1)
        raise RewriteError("copy length not written")
    expr = call.args[role.count]
    if role.wide:
        return unit_expr_quantity(expr, g.consts.sizes.wchar, g.consts)
    return byte_expr_quantity(expr, g.consts)


# -- per-feature recipe sets ---------------------------------------------------------

def _overflow_recipes(ctx: _Context, w: FeatureWitness) -> Iterator[Recipe]:
    g = ctx.graphs[w.function]
    ast = ctx.ast
    c = w.constants
    n = c["n"]
    use = w.nodes["use"]
    q_n = lambda: count_quantity(ctx, g, use)
    f = w.feature

    if f is FeatureId.BO:
        q_s = lambda: buffer_quantity(ctx, g, w.nodes["src_def"])
        len_s = c["LEN_s"]
        yield Recipe(VariantKind.FPP, f"LEN_s {len_s} -> {len_s - 1}",
                     lambda: [q_s().set(ast, len_s - 1, "floor")[0]])
        yield Recipe(VariantKind.FPP, f"n {n} -> {n + 1}",
                     lambda: [q_n().set(ast, n + 1, "ceil")[0]])
        yield Recipe(VariantKind.FEP, f"LEN_s {len_s} -> {n}",
                     lambda: [q_s().set(ast, n, "ceil")[0]])
        yield Recipe(VariantKind.FEP, f"n {n} -> {len_s}",
                     lambda: [q_n().set(ast, len_s, "floor")[0]])
        return

    q_d = lambda: buffer_quantity(ctx, g, w.nodes["def"])
    len_d = c["LEN_d"]
    if f is FeatureId.OE:
        yield Recipe(VariantKind.FPP, f"LEN_d {len_d} -> {len_d + 1}, n {n} -> {n + 1}",
                     lambda: [q_d().set(ast, len_d + 1, "exact")[0],
                              q_n().set(ast, n + 1, "exact")[0]])
        yield Recipe(VariantKind.FEP, f"n {n} -> {len_d}",
                     lambda: [q_n().set(ast, len_d, "floor")[0]])
        yield Recipe(VariantKind.FEP, f"LEN_d {len_d} -> {n}",
                     lambda: [q_d().set(ast, n, "ceil")[0]])
        return

    yield Recipe(VariantKind.FPP, f"LEN_d {len_d} -> {len_d - 1}",
                 lambda: [q_d().set(ast, len_d - 1, "floor")[0]])
    if f is FeatureId.BSB:
        def grow_both() -> Edits:
            edit_n, new_n = q_n().set(ast, n + 1, "ceil")
            edit_s, _ = buffer_quantity(ctx, g, w.nodes["src_def"]).set(ast, new_n, "exact")
            return [edit_n, edit_s]
        yield Recipe(VariantKind.FPP, f"n {n} -> {n + 1}, LEN_s follows", grow_both)
    else:
        yield Recipe(VariantKind.FPP, f"n {n} -> {n + 1}",
                     lambda: [q_n().set(ast, n + 1, "ceil")[0]])
    yield Recipe(VariantKind.FEP, f"LEN_d {len_d} -> {n}",
                 lambda: [q_d().set(ast, n, "ceil")[0]])
    yield Recipe(VariantKind.FEP, f"n {n} -> {len_d}",
                 lambda: [q_n().set(ast, len_d, "floor")[0]])


def _free_arg_to_null(ctx: _Context, g: PropertyGraph, node: int) -> Edits:
    call = g.call[node]
    return [replace_node(ctx.ast, call.args[0], "NULL")]


def _allocation_text(ctx: _Context, g: PropertyGraph, node: int, var: str) -> str:
    defs = [u for u in buffer_definitions(g, node, var) if g.kind(u) is NodeKind.AF]
    if not defs:
        raise RewriteError(f"no allocation of {var} reaches the free")
    stmt = g.stmt[defs[0]]
    if isinstance(stmt, A.Decl):
        return ctx.ast.text(stmt.init)
    e = stmt.expr
    while isinstance(e, A.Paren):
        e = e.expr
    return ctx.ast.text(e.value)


def _deallocated_recipes(ctx: _Context, w: FeatureWitness) -> Iterator[Recipe]:
    g = ctx.graphs[w.function]
    ast = ctx.ast
    index = ctx.index[w.function]
    b = w.vars["buffer"]
    if w.feature is FeatureId.DF:
        first, second = w.nodes["first_free"], w.nodes["second_free"]
        yield Recipe(VariantKind.FPP, "printf between the frees",
                     lambda: [insert_before(ast, index, g.stmt[second], BENIGN)])
        yield Recipe(VariantKind.FEP, f"re-allocate {b} between the frees",
                     lambda: [insert_before(ast, index, g.stmt[second],
                                            f"{b} = {_allocation_text(ctx, g, first, b)};")])
        yield Recipe(VariantKind.FEP, "second free -> free(NULL)",
                     lambda: _free_arg_to_null(ctx, g, second))
        return
    free, use, uses = w.nodes["free"], w.nodes["use"], w.nodes["uses"]

    def uses_to_printf() -> Edits:
        out = []
        for n in uses:
            stmt = g.stmt.get(n)
            if not isinstance(stmt, A.ExprStmt) or index.role.get(stmt.id, ("",))[0] not in ("block", "body"):
                raise RewriteError("use is not a plain statement")
            out.append(replace_node(ast, stmt, BENIGN))
        return out

    yield Recipe(VariantKind.FPP, "printf between free and use",
                 lambda: [insert_before(ast, index, g.stmt[use], BENIGN)])
    yield Recipe(VariantKind.FEP, "free -> free(NULL)", lambda: _free_arg_to_null(ctx, g, free))
    yield Recipe(VariantKind.FEP, "use -> printf", uses_to_printf)


def _buffer_elements(ctx: _Context, g: PropertyGraph, node: int, buffer: str) -> int:
    for u in buffer_definitions(g, node, buffer):
        try:
            q = buffer_quantity(ctx, g, u)
        except RewriteError:
            continue
        return q.steps if g.kind(u) is NodeKind.AD else q.value
    return 1


def _guard_edit(ctx: _Context, g: PropertyGraph, node: int, guard: str) -> Edits:
    ast = ctx.ast
    direct = [e.src for e in g.in_edges(node, EdgeKind.CD) if e.label == "T"]
    conds = [c for c in direct if isinstance(g.stmt.get(c), (A.If, A.While, A.For))]
    if conds:
        return [conjoin(ast, g.stmt[max(conds)].cond, guard)]
    return [wrap_in_if(ast, ctx.index[g.function], g.stmt[node], guard)]


def _range_recipes(ctx: _Context, w: FeatureWitness, diagnostics: bool) -> Iterator[Recipe]:
    g = ctx.graphs[w.function]
    node = w.nodes["use"]
    i = w.vars["index"]
    bound = lambda: 2 * _buffer_elements(ctx, g, node, w.vars["buffer"])
    yield Recipe(VariantKind.FPP, f"conjoin {i} > -2L",
                 lambda: _guard_edit(ctx, g, node, f"{i} > -{bound()}"))
    yield Recipe(VariantKind.FEP, f"conjoin {i} >= 0", lambda: _guard_edit(ctx, g, node, f"{i} >= 0"))
    yield Recipe(VariantKind.FEP, f"conjoin {i} > -1", lambda: _guard_edit(ctx, g, node, f"{i} > -1"))
    if diagnostics:
        yield Recipe(VariantKind.DIAGNOSTIC, f"conjoin {i} >= (cmp - cmp)",
                     lambda: _guard_edit(ctx, g, node, f"{i} >= ((-{bound()}) - (-{bound()}))"))


def _swap_callee(ctx: _Context, g: PropertyGraph, node: int) -> Edits:
    ast = ctx.ast
    call = g.call[node]
    new = CALLEE_SWAPS.get(call.callee)
    if new is None:
        raise RewriteError(f"no swap partner for {call.callee}")
    edits = [replace_token(ast, call.callee_tok, new)]
    if {call.callee, new} == {"memset", "wmemset"}:
        count = call.args[2]
        if not isinstance(count, A.IntLit):
            raise RewriteError("count unit fix needs a literal count")
        wchar = g.consts.sizes.wchar
        if new == "wmemset":
            if count.value % wchar:
                raise RewriteError("byte count not a whole number of wide characters")
            edits.append(replace_node(ast, count, str(count.value // wchar)))
        else:
            edits.append(replace_node(ast, count, str(count.value * wchar)))
    return edits


def _api_recipes(ctx: _Context, w: FeatureWitness) -> Iterator[Recipe]:
    g = ctx.graphs[w.function]
    node = w.nodes["use"]
    call = g.call[node]
    if w.feature is FeatureId.WA:
        partner = CALLEE_SWAPS.get(call.callee)
        if partner is not None:
            yield Recipe(VariantKind.FPP, f"{call.callee} -> {partner}",
                         lambda: _swap_callee(ctx, g, node))
        stub = WRITE_STUB
    else:
        stub = READ_STUB
    yield Recipe(VariantKind.FEP, f"{call.callee} -> {stub}",
                 lambda: [replace_token(ctx.ast, call.callee_tok, stub)])


def recipes_for(ctx: _Context, w: FeatureWitness, diagnostics: bool = False) -> Iterator[Recipe]:
    f = w.feature
    if f in (FeatureId.IBS, FeatureId.BSB, FeatureId.OE, FeatureId.BO):
        yield from _overflow_recipes(ctx, w)
    elif f in (FeatureId.DF, FeatureId.UAF):
        yield from _deallocated_recipes(ctx, w)
    elif f in (FeatureId.BUW, FeatureId.BUR):
        yield from _range_recipes(ctx, w, diagnostics)
    else:
        yield from _api_recipes(ctx, w)


# -- driver ------------------------------------------------------------------------

def gen_vf_perturbations(annotated: AnnotatedSample, analysis: Optional[Analysis] = None,
                         features: Optional[set[FeatureId]] = None, diagnostics: bool = False,
                         uneditable: Optional[list[UneditableWitness]] = None) -> list[PerturbedVariant]:
    """FPP and FEP variants for every witness on the sample.

    Recipes that cannot be applied are skipped; the reasons are appended to
    ``uneditable`` when given.
    """
    sample = annotated.sample
    if analysis is None:
        analysis = analyze_source(sample.source, sample.vulnerable_lines, sample.sample_id)
    ctx = _Context.of(analysis)
    total = len(annotated.witnesses)
    counters: dict[tuple[FeatureId, VariantKind], int] = {}
    out: list[PerturbedVariant] = []
    for w in annotated.witnesses:
        if features is not None and w.feature not in features:
            continue
        for r in recipes_for(ctx, w, diagnostics):
            label = f"{w.feature.value} {r.kind.value}: {r.description} (line {w.anchor_line})"
            try:
                edits = r.build()
                source = apply_edits(sample.source, edits)
                mapping = line_map(sample.source, edits)
            except (RewriteError, KeyError, IndexError, ValueError) as exc:
                if uneditable is not None:
                    uneditable.append(UneditableWitness(w, label, str(exc)))
                continue
            key = (w.feature, r.kind)
            counters[key] = counters.get(key, 0) + 1
            moved = remap_lines(sample.vulnerable_lines, mapping)
            partial = False
            if r.kind is VariantKind.FEP:
                expected, partial = fep_label(sample.label, total)
                lines = moved if expected is Label.VULNERABLE else frozenset()
            elif r.kind is VariantKind.DIAGNOSTIC:
                expected, lines = None, moved
            else:
                expected, lines = sample.label, moved
            out.append(PerturbedVariant(
                variant_id=variant_id(sample.sample_id, w.feature, r.kind, counters[key]),
                sample_id=sample.sample_id, kind=r.kind, feature=w.feature, source=source,
                expected_label=expected, recipe=label, vulnerable_lines=lines, partial=partial,
                line_mapping=mapping, check_lines=moved, target=w))
    return out
