"""Independent brute-force oracles over a built graph's control flow."""
from __future__ import annotations

from viperkit.cpg.graph import NodeKind, PropertyGraph


def flow_nodes(g: PropertyGraph) -> list[int]:
    return sorted(g.flow)


def statement_count(g: PropertyGraph) -> int:
    return sum(1 for n in g.flow if g.kind(n) not in (NodeKind.ENTRY, NodeKind.EXIT))


def reaching_dd(g: PropertyGraph) -> set[tuple[int, int, str]]:
    """(def, use, var) triples: some CFG path of length >= 1 from the def to
    the use crosses no other definition of var."""
    out = set()
    for d in flow_nodes(g):
        for v in g.defs.get(d, ()):
            seen = set()
            stack = list(g.successors(d))
            while stack:
                n = stack.pop()
                if n in seen:
                    continue
                seen.add(n)
                if v in g.uses.get(n, ()):
                    out.add((d, n, v))
                if v not in g.defs.get(n, ()):
                    stack.extend(g.successors(n))
    return out


def all_paths(g: PropertyGraph, start: int) -> list[list[int]]:
    """Every simple CFG path from ``start`` to EXIT."""
    paths = []

    def walk(n, path, on):
        if n == g.exit:
            paths.append(path)
            return
        for s in g.successors(n):
            if s not in on:
                on.add(s)
                walk(s, path + [s], on)
                on.discard(s)

    walk(start, [start], {start})
    return paths


def post_dominators(g: PropertyGraph) -> dict[int, set[int]]:
    """Strict post-dominators by intersecting all simple paths to EXIT."""
    out = {}
    for n in flow_nodes(g):
        if n == g.exit:
            continue
        paths = all_paths(g, n)
        if not paths:
            continue
        common = set(paths[0])
        for p in paths[1:]:
            common &= set(p)
        common.discard(n)
        out[n] = common
    return out


def immediate(pdom: dict[int, set[int]]) -> dict[int, int]:
    ip = {}
    for n, strict in pdom.items():
        for m in strict:
            # the closest one is post-dominated by every other candidate
            if all(o == m or o in pdom.get(m, set()) for o in strict):
                ip[n] = m
    return ip


def control_dependence(g: PropertyGraph, pdom: dict[int, set[int]]) -> set[tuple[int, int, str]]:
    """w depends on branch (u, label) iff w post-dominates (or is) that
    successor and w does not strictly post-dominate u."""
    out = set()
    for u in flow_nodes(g):
        succ = g.flow[u]
        if len(succ) < 2:
            continue
        for s, label in succ:
            for w in flow_nodes(g):
                covers = w == s or w in pdom.get(s, set())
                if covers and w not in pdom.get(u, set()):
                    out.add((u, w, label))
    return out
