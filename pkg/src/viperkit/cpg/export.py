"""Plain-text graph dump: one node or edge per line, ``key=value`` attributes."""
from __future__ import annotations

import json

from .graph import Edge, PropertyGraph, PropertyKey


def _value(v) -> str:
    if isinstance(v, str):
        return json.dumps(v)
    if hasattr(v, "value") and isinstance(getattr(v, "value"), str):
        return v.value
    return repr(v)


def _attrs(g: PropertyGraph, target) -> str:
    items = []
    for key in PropertyKey:
        if (target, key) in g.props:
            items.append(f"{key.value}={_value(g.props[(target, key)])}")
    return " ".join(items)


def export_text(g: PropertyGraph) -> str:
    lines = [f"graph {json.dumps(g.function)}"]
    for n in sorted(g.nodes):
        lines.append(f"node {n} {_attrs(g, n)}".rstrip())
    order = sorted(g.edges, key=lambda e: (e.src, e.dst, e.kind.value, e.label))
    for e in order:
        lines.append(f"edge {e.src} -> {e.dst} {_attrs(g, e)}".rstrip())
    for n in sorted(g.flow):
        for s, label in g.flow[n]:
            lines.append(f"flow {n} -> {s}" + (f" branch={label}" if label else ""))
    return "\n".join(lines) + "\n"


__all__ = ["export_text", "Edge"]
