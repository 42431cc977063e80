"""The abridged code property graph G = (V, E, mu)."""
from __future__ import annotations

import enum
import hashlib
from typing import Any, Iterable, Iterator, NamedTuple, Union


class NodeKind(str, enum.Enum):
    WF = "WF"          # buffer write call
    RF = "RF"          # sensitive read call
    CF = "CF"          # buffer copy call outside the write list
    AF = "AF"          # allocation call
    AD = "AD"          # array declaration
    FREE = "FREE"
    COND = "COND"
    ASSIGN = "ASSIGN"
    DECL = "DECL"
    CALL = "CALL"
    RET = "RET"
    ENTRY = "ENTRY"
    EXIT = "EXIT"
    VAR = "VAR"        # variable node, endpoint of DEF/USE edges


class EdgeKind(str, enum.Enum):
    DD = "DD"
    CD = "CD"
    PD = "PD"
    DEF = "DEF"
    USE = "USE"


class PropertyKey(str, enum.Enum):
    TYPE = "type"
    LINE = "line"
    CODE = "code"
    VAR = "var"
    LEN = "len"
    ARG_DEST = "arg_dest"
    ARG_SRC = "arg_src"
    ARG_COUNT = "arg_count"
    ARG_INDEX = "arg_index"
    CALLEE = "callee"
    API_CLASS = "api_class"
    BRANCH = "branch"


class _Absent:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ABSENT"

    def __reduce__(self):
        return (_Absent, ())


ABSENT = _Absent()


class UnknownTarget(KeyError):
    pass


class Edge(NamedTuple):
    src: int
    dst: int
    kind: EdgeKind
    label: str = ""


Target = Union[int, Edge]


class PropertyGraph:
    """Nodes, typed edges, and a keyed property store.

    ``flow`` holds the statement-level control-flow successors used by the
    analyses; it is kept beside the graph rather than as a sixth edge kind.
    """

    def __init__(self, function: str = ""):
        self.function = function
        self.nodes: dict[int, None] = {}
        self.edges: dict[Edge, None] = {}
        self.props: dict[tuple[Target, PropertyKey], Any] = {}
        self.flow: dict[int, list[tuple[int, str]]] = {}
        self._in: dict[int, list[Edge]] = {}
        self._out: dict[int, list[Edge]] = {}
        # analysis side tables, keyed by node id
        self.defs: dict[int, frozenset[str]] = {}
        self.uses: dict[int, frozenset[str]] = {}
        self.stmt: dict[int, Any] = {}
        self.call: dict[int, Any] = {}
        self.var_nodes: dict[str, int] = {}
        self.entry = -1
        self.exit = -1

    # -- construction ------------------------------------------------------
    def add_node(self, node_id: int, kind: NodeKind, **props: Any) -> int:
        self.nodes[node_id] = None
        self.props[(node_id, PropertyKey.TYPE)] = kind
        for k, v in props.items():
            self.props[(node_id, PropertyKey(k))] = v
        self._in.setdefault(node_id, [])
        self._out.setdefault(node_id, [])
        return node_id

    def add_edge(self, src: int, dst: int, kind: EdgeKind, label: str = "", **props: Any) -> Edge:
        if src not in self.nodes or dst not in self.nodes:
            raise UnknownTarget((src, dst))
        e = Edge(src, dst, kind, label)
        if e not in self.edges:
            self.edges[e] = None
            self._out[src].append(e)
            self._in[dst].append(e)
            self.props[(e, PropertyKey.TYPE)] = kind
            if kind is EdgeKind.DD:
                self.props[(e, PropertyKey.VAR)] = label
            elif kind is EdgeKind.CD:
                self.props[(e, PropertyKey.BRANCH)] = label
        for k, v in props.items():
            self.props[(e, PropertyKey(k))] = v
        return e

    def remove_edge(self, e: Edge) -> None:
        del self.edges[e]
        self._out[e.src].remove(e)
        self._in[e.dst].remove(e)
        for key in [k for k in self.props if k[0] == e]:
            del self.props[key]

    # -- queries -------------------------------------------------------------
    def kind(self, node: int) -> NodeKind:
        return self.props[(node, PropertyKey.TYPE)]

    def get(self, target: Target, key: PropertyKey | str, default: Any = ABSENT) -> Any:
        return self.props.get((target, PropertyKey(key)), default)

    def nodes_of(self, *kinds: NodeKind) -> list[int]:
        return [n for n in self.nodes if self.props[(n, PropertyKey.TYPE)] in kinds]

    def in_edges(self, node: int, kind: EdgeKind | None = None) -> list[Edge]:
        return [e for e in self._in.get(node, ()) if kind is None or e.kind is kind]

    def out_edges(self, node: int, kind: EdgeKind | None = None) -> list[Edge]:
        return [e for e in self._out.get(node, ()) if kind is None or e.kind is kind]

    def edges_of(self, kind: EdgeKind) -> list[Edge]:
        return [e for e in self.edges if e.kind is kind]

    def successors(self, node: int) -> list[int]:
        return [s for s, _ in self.flow.get(node, ())]

    def statement_nodes(self) -> list[int]:
        return [n for n in self.nodes if self.kind(n) not in (NodeKind.VAR,)]

    def line(self, node: int) -> Any:
        return self.get(node, PropertyKey.LINE)

    # -- identity ------------------------------------------------------------
    def _canonical(self) -> Iterator[str]:
        yield f"fn={self.function}"
        for n in sorted(self.nodes):
            yield f"n{n}"
        for e in sorted(self.edges, key=lambda e: (e.src, e.dst, e.kind.value, e.label)):
            yield f"e{e.src}>{e.dst}:{e.kind.value}:{e.label}"
        items = []
        for (target, key), value in self.props.items():
            tk = f"n{target}" if isinstance(target, int) else \
                f"e{target.src}>{target.dst}:{target.kind.value}:{target.label}"
            items.append(f"{tk}.{key.value}={value!r}")
        yield from sorted(items)

    def property_hash(self) -> str:
        h = hashlib.sha256()
        for line in self._canonical():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PropertyGraph):
            return NotImplemented
        return (self.function == other.function and set(self.nodes) == set(other.nodes)
                and set(self.edges) == set(other.edges) and self.props == other.props)

    __hash__ = None  # mutable


def mu_get(g: PropertyGraph, target: Target, key: PropertyKey | str) -> Any:
    """Property lookup; ``ABSENT`` if the key was never set on ``target``."""
    if not _exists(g, target):
        raise UnknownTarget(target)
    return g.props.get((target, PropertyKey(key)), ABSENT)


def mu_set(g: PropertyGraph, target: Target, key: PropertyKey | str, value: Any) -> None:
    if not _exists(g, target):
        raise UnknownTarget(target)
    g.props[(target, PropertyKey(key))] = value


def _exists(g: PropertyGraph, target: Target) -> bool:
    if isinstance(target, Edge):
        return target in g.edges
    return target in g.nodes


def clone_graph(g: PropertyGraph) -> PropertyGraph:
    """Independent copy; AST references are shared since ASTs are immutable."""
    c = PropertyGraph(g.function)
    c.nodes = dict(g.nodes)
    c.edges = dict(g.edges)
    c.props = dict(g.props)
    c.flow = {k: list(v) for k, v in g.flow.items()}
    c._in = {k: list(v) for k, v in g._in.items()}
    c._out = {k: list(v) for k, v in g._out.items()}
    c.defs = dict(g.defs)
    c.uses = dict(g.uses)
    c.stmt = dict(g.stmt)
    c.call = dict(g.call)
    c.var_nodes = dict(g.var_nodes)
    c.entry, c.exit = g.entry, g.exit
    return c


def iter_targets(g: PropertyGraph) -> Iterable[Target]:
    yield from g.nodes
    yield from g.edges
