"""The ten detection rules over a per-function property graph.

Every rule follows the same skeleton: pick the candidate nodes by kind, walk
incoming DD edges (or CFG paths, or CD ancestors) to the nodes that give the
predicate its operands, then evaluate the predicate on folded constants.
Unknown constants make a rule abstain.
"""
from __future__ import annotations

from collections import deque
from typing import AbstractSet, Iterable, Iterator, Optional

from ..cpg.builder import ident_name, strip
from ..cpg.consts import UNKNOWN, ConstEvaluator
from ..cpg.graph import ABSENT, EdgeKind, NodeKind, PropertyGraph, PropertyKey as K
from ..frontend import ast as A
from .features import FeatureId, FeatureWitness

BUFFER_SOURCES = (NodeKind.AD, NodeKind.AF)


def _known(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def alias_source(g: PropertyGraph, node: int, var: str) -> Optional[str]:
    """``q`` when ``node`` is the plain copy ``var = q`` or ``T *var = q``."""
    stmt = g.stmt.get(node)
    value = None
    if isinstance(stmt, A.Decl) and stmt.name == var and not stmt.is_array:
        value = stmt.init
    elif isinstance(stmt, A.ExprStmt):
        e = strip(stmt.expr)
        if isinstance(e, A.Assign) and e.op == "=" and ident_name(e.target) == var:
            value = e.value
    return ident_name(value) if value is not None else None


def buffer_definitions(g: PropertyGraph, node: int, var: str) -> list[int]:
    """AD/AF nodes reaching ``node`` for ``var``, through direct copy chains."""
    found: list[int] = []
    seen: set[tuple[int, str]] = set()
    stack = [(node, var)]
    while stack:
        n, v = stack.pop()
        if (n, v) in seen:
            continue
        seen.add((n, v))
        for e in g.in_edges(n, EdgeKind.DD):
            if e.label != v:
                continue
            u = e.src
            if g.kind(u) in BUFFER_SOURCES and g.get(u, K.VAR) == v:
                if u not in found:
                    found.append(u)
                continue
            q = alias_source(g, u, v)
            if q is not None:
                stack.append((u, q))
    return sorted(found)


def _line(g: PropertyGraph, n: int) -> int:
    return g.get(n, K.LINE)


# -- rules 2.1 - 2.4 ---------------------------------------------------------------

def detect_overflow(g: PropertyGraph, sample_id: str = "") -> list[FeatureWitness]:
    out: list[FeatureWitness] = []
    for v in g.nodes_of(NodeKind.WF, NodeKind.CF):
        n = g.get(v, K.ARG_COUNT)
        if not _known(n):
            continue
        d = g.get(v, K.ARG_DEST)
        s = g.get(v, K.ARG_SRC)
        src_defs = []
        if s is not ABSENT:
            src_defs = [(w, g.get(w, K.LEN)) for w in buffer_definitions(g, v, s)]
            src_defs = [(w, ln) for w, ln in src_defs if _known(ln)]
        if d is not ABSENT:
            for u in buffer_definitions(g, v, d):
                len_d = g.get(u, K.LEN)
                if not _known(len_d):
                    continue
                base = dict(sample_id=sample_id, function=g.function)
                if n == len_d + 1:
                    out.append(FeatureWitness(
                        feature=FeatureId.OE, **base,
                        lines={"def_line": _line(g, u), "use_line": _line(g, v)},
                        vars={"dest": d}, constants={"LEN_d": len_d, "n": n},
                        nodes={"def": u, "use": v}))
                    continue
                if len_d >= n:
                    continue
                same = [(w, ln) for w, ln in src_defs if ln == n]
                if same:
                    w, len_s = same[0]
                    out.append(FeatureWitness(
                        feature=FeatureId.BSB, **base,
                        lines={"def_line": _line(g, u), "src_def_line": _line(g, w),
                               "use_line": _line(g, v)},
                        vars={"dest": d, "src": s},
                        constants={"LEN_d": len_d, "LEN_s": len_s, "n": n},
                        nodes={"def": u, "src_def": w, "use": v}))
                else:
                    out.append(FeatureWitness(
                        feature=FeatureId.IBS, **base,
                        lines={"def_line": _line(g, u), "use_line": _line(g, v)},
                        vars={"dest": d}, constants={"LEN_d": len_d, "n": n},
                        nodes={"def": u, "use": v}))
        if g.get(v, K.API_CLASS) in ("write", "copy"):
            for w, len_s in src_defs:
                if len_s < n:
                    out.append(FeatureWitness(
                        sample_id=sample_id, feature=FeatureId.BO, function=g.function,
                        lines={"src_def_line": _line(g, w), "use_line": _line(g, v)},
                        vars={"src": s}, constants={"LEN_s": len_s, "n": n},
                        nodes={"src_def": w, "use": v}))
    return out


# -- rules 2.5 - 2.6 ---------------------------------------------------------------

def reachable_without_def(g: PropertyGraph, start: int, var: str) -> list[int]:
    """Nodes reachable from ``start`` by a path of length >= 1 whose inner
    nodes never define ``var``. A defining node is reported but not crossed."""
    seen: set[int] = set()
    order: list[int] = []
    queue = deque(g.successors(start))
    while queue:
        n = queue.popleft()
        if n in seen:
            continue
        seen.add(n)
        order.append(n)
        if var in g.defs.get(n, ()):
            continue
        queue.extend(g.successors(n))
    return sorted(order)


def detect_deallocated_use(g: PropertyGraph, sample_id: str = "") -> list[FeatureWitness]:
    out: list[FeatureWitness] = []
    frees = g.nodes_of(NodeKind.FREE)
    for u in frees:
        b = g.get(u, K.VAR)
        if b is ABSENT:
            continue
        reach = reachable_without_def(g, u, b)
        for v in reach:
            if g.kind(v) is NodeKind.FREE and g.get(v, K.VAR) == b:
                out.append(FeatureWitness(
                    sample_id=sample_id, feature=FeatureId.DF, function=g.function,
                    lines={"first_free_line": _line(g, u), "second_free_line": _line(g, v)},
                    vars={"buffer": b}, nodes={"first_free": u, "second_free": v}))
        uses = tuple(v for v in reach
                     if g.kind(v) is not NodeKind.FREE and b in g.uses.get(v, ()))
        if uses:
            out.append(FeatureWitness(
                sample_id=sample_id, feature=FeatureId.UAF, function=g.function,
                lines={"dealloc_line": _line(g, u), "use_line": _line(g, uses[0])},
                vars={"buffer": b}, nodes={"free": u, "use": uses[0], "uses": uses}))
    return out


# -- rules 2.7 - 2.8 ---------------------------------------------------------------

def conjuncts(e: A.Expr) -> Iterator[A.Expr]:
    e = strip(e)
    if isinstance(e, A.Binary) and e.op == "&&":
        yield from conjuncts(e.left)
        yield from conjuncts(e.right)
    else:
        yield e


def is_lower_guard(e: A.Expr, idx: str, consts: ConstEvaluator) -> bool:
    """``idx >= K`` (K >= 0) or ``idx > K`` (K >= -1), in either operand order."""
    e = strip(e)
    if not isinstance(e, A.Binary):
        return False
    op, left, right = e.op, e.left, e.right
    if ident_name(right) == idx and ident_name(left) != idx:
        flipped = {"<=": ">=", "<": ">"}.get(op)
        if flipped is None:
            return False
        op, left, right = flipped, right, left
    if ident_name(left) != idx or op not in (">=", ">"):
        return False
    k = consts.eval(right)
    if k is UNKNOWN:
        return False
    return k >= 0 if op == ">=" else k >= -1


def guarding_conditions(g: PropertyGraph, node: int) -> Iterator[int]:
    """COND nodes whose true branch ``node`` transitively depends on."""
    seen: set[int] = set()
    stack = [node]
    while stack:
        n = stack.pop()
        for e in g.in_edges(n, EdgeKind.CD):
            if e.label == "T" and e.src not in seen:
                seen.add(e.src)
                yield e.src
                stack.append(e.src)


def _cond_expr(g: PropertyGraph, c: int) -> Optional[A.Expr]:
    stmt = g.stmt.get(c)
    if isinstance(stmt, (A.If, A.While, A.For)):
        return stmt.cond
    return None


def detect_range_check(g: PropertyGraph, sample_id: str = "",
                       consts: Optional[ConstEvaluator] = None) -> list[FeatureWitness]:
    if consts is None:
        consts = getattr(g, "consts", None) or ConstEvaluator()
    out: list[FeatureWitness] = []
    access = getattr(g, "index_access", {})
    for n in sorted(access):
        emitted: set[tuple[str, str, str]] = set()
        for acc in access[n]:
            key = (acc.buffer, acc.index, acc.mode)
            if key in emitted:
                continue
            conds = [_cond_expr(g, c) for c in guarding_conditions(g, n)]
            guarded = any(is_lower_guard(c, acc.index, consts)
                          for cond in conds if cond is not None for c in conjuncts(cond))
            if guarded:
                continue
            emitted.add(key)
            feature = FeatureId.BUW if acc.mode == "write" else FeatureId.BUR
            out.append(FeatureWitness(
                sample_id=sample_id, feature=feature, function=g.function,
                lines={"use_line": _line(g, n)},
                vars={"buffer": acc.buffer, "index": acc.index}, nodes={"use": n}))
    return out


# -- rules 2.9 - 2.10 --------------------------------------------------------------

def detect_sensitive_api(g: PropertyGraph, vulnerable_lines: Optional[AbstractSet[int]],
                         sample_id: str = "",
                         overflow: Optional[Iterable[FeatureWitness]] = None) -> list[FeatureWitness]:
    """RA/WA on vulnerable lines; disabled (empty) when ``vulnerable_lines`` is None."""
    if vulnerable_lines is None:
        return []
    if overflow is None:
        overflow = detect_overflow(g, sample_id)
    owned = {w.nodes.get("use") for w in overflow}
    out: list[FeatureWitness] = []
    for v in g.nodes_of(NodeKind.RF, NodeKind.WF):
        if _line(g, v) not in vulnerable_lines:
            continue
        kind = g.kind(v)
        if kind is NodeKind.WF and v in owned:
            continue
        feature = FeatureId.RA if kind is NodeKind.RF else FeatureId.WA
        out.append(FeatureWitness(
            sample_id=sample_id, feature=feature, function=g.function,
            lines={"use_line": _line(g, v)}, vars={"api": g.get(v, K.CALLEE)},
            nodes={"use": v}))
    return out


def detect_all(g: PropertyGraph, vulnerable_lines: Optional[AbstractSet[int]] = None,
               sample_id: str = "") -> list[FeatureWitness]:
    overflow = detect_overflow(g, sample_id)
    return (overflow + detect_deallocated_use(g, sample_id) + detect_range_check(g, sample_id)
            + detect_sensitive_api(g, vulnerable_lines, sample_id, overflow))
