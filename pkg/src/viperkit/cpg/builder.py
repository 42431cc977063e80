"""Per-function CPG construction: CFG, reaching definitions, post-dominance,
control dependence, DEF/USE, node classification and property assignment."""
from __future__ import annotations

import re
from typing import NamedTuple, Optional

from ..frontend import ast as A
from .apis import ALL_APIS, ALLOC_APIS, COPY_APIS, FREE_APIS, READ_APIS, WRITE_APIS
from .consts import DEFAULT_SIZEOF, UNKNOWN, ConstEvaluator, ConstValue, SizeofModel, VarInfo
from .graph import ABSENT, EdgeKind, NodeKind, PropertyGraph, PropertyKey as K


class UnsupportedConstruct(ValueError):
    def __init__(self, node: A.Node, message: str = "unsupported construct"):
        super().__init__(message)
        self.node = node


class IndexAccess(NamedTuple):
    buffer: str
    index: str
    mode: str              # "write" | "read"
    node: A.Index


NOT_VARIABLES = frozenset({"NULL"})


def strip(e: Optional[A.Expr]) -> Optional[A.Expr]:
    while isinstance(e, (A.Paren, A.Cast)):
        e = e.expr
    return e


def ident_name(e: Optional[A.Expr]) -> Optional[str]:
    e = strip(e)
    if isinstance(e, A.Ident) and e.name not in NOT_VARIABLES:
        return e.name
    return None


def primary_call(item) -> Optional[A.Call]:
    """The call a statement is 'about': a bare call, ``x = call(...)`` or
    ``T x = call(...)``."""
    if isinstance(item, A.Decl):
        e = strip(item.init)
    elif isinstance(item, A.ExprStmt):
        e = strip(item.expr)
    else:
        e = strip(item)
    if isinstance(e, A.Assign) and e.op == "=":
        e = strip(e.value)
    return e if isinstance(e, A.Call) else None


# -- DEF / USE ------------------------------------------------------------------

class _DefUse:
    def __init__(self, skip: frozenset[str]):
        self.skip = skip
        self.defs: set[str] = set()
        self.uses: set[str] = set()
        self.index: list[IndexAccess] = []

    def use(self, e: Optional[A.Expr], write_index: bool = False) -> None:
        if e is None:
            return
        if isinstance(e, A.Ident):
            if e.name not in self.skip:
                self.uses.add(e.name)
        elif isinstance(e, (A.IntLit, A.CharLit, A.StrLit, A.SizeofType, A.SizeofExpr)):
            return
        elif isinstance(e, (A.Paren, A.Cast)):
            self.use(e.expr, write_index)
        elif isinstance(e, A.Assign):
            self.assign_target(e.target, compound=e.op != "=")
            self.use(e.value)
        elif isinstance(e, (A.Postfix,)) or (isinstance(e, A.Unary) and e.op in ("++", "--")):
            self.assign_target(e.operand, compound=True)
        elif isinstance(e, A.Unary):
            self.use(e.operand)
        elif isinstance(e, A.Binary):
            self.use(e.left)
            self.use(e.right)
        elif isinstance(e, A.Call):
            for a in e.args:
                self.use(a)
        elif isinstance(e, A.Index):
            self._index(e, "write" if write_index else "read")
            self.use(e.base)
            self.use(e.index)

    def _index(self, e: A.Index, mode: str) -> None:
        b, i = ident_name(e.base), ident_name(e.index)
        if b is not None and i is not None and i not in self.skip:
            self.index.append(IndexAccess(b, i, mode, e))

    def assign_target(self, t: A.Expr, compound: bool) -> None:
        t0 = t
        while isinstance(t0, A.Paren):
            t0 = t0.expr
        if isinstance(t0, A.Ident):
            if t0.name not in self.skip:
                self.defs.add(t0.name)
                if compound:
                    self.uses.add(t0.name)
        elif isinstance(t0, A.Index):
            self.use(t0, write_index=True)
        else:
            self.use(t0)


def _collapse(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


# -- builder ----------------------------------------------------------------------

class _Builder:
    def __init__(self, ast: A.Ast, fn: A.FunctionDef, sizes: SizeofModel):
        self.ast = ast
        self.fn = fn
        self.sizes = sizes
        self.g = PropertyGraph(fn.name)
        self.next_id = 0
        skip = set(ast.defines) | NOT_VARIABLES | {f.name for f in ast.functions}
        self.skip = frozenset(skip)
        self.env = self._environment()
        self.consts = ConstEvaluator(ast.defines, sizes, ast.typedefs, self.env)
        self.index_access: dict[int, tuple[IndexAccess, ...]] = {}

    def _environment(self) -> dict[str, VarInfo]:
        env: dict[str, VarInfo] = {}
        seen: dict[str, int] = {}
        decls = [p for p in self.fn.params if p.name] + \
                [n for n in self.fn.body.walk() if isinstance(n, A.Decl)]
        for d in decls:
            seen[d.name] = seen.get(d.name, 0) + 1
        probe = ConstEvaluator(self.ast.defines, self.sizes, self.ast.typedefs)
        for d in decls:
            if seen[d.name] > 1:
                continue
            if isinstance(d, A.Param):
                env[d.name] = VarInfo(d.type)
            else:
                env[d.name] = VarInfo(d.type, d.is_array, self._array_count(d, probe))
        return env

    @staticmethod
    def _array_count(d: A.Decl, ev: ConstEvaluator) -> ConstValue:
        if not d.is_array:
            return UNKNOWN
        if d.array is not None:
            return ev.eval(d.array)
        if isinstance(d.init, A.StrLit):
            return d.init.length + 1
        return UNKNOWN

    # -- nodes -------------------------------------------------------------
    def new_node(self, kind: NodeKind, line, code: str, stmt=None, **props) -> int:
        n = self.next_id
        self.next_id += 1
        self.g.add_node(n, kind, line=line, code=code, **props)
        self.g.flow[n] = []
        if stmt is not None:
            self.g.stmt[n] = stmt
        return n

    def connect(self, preds: list[tuple[int, str]], node: int) -> None:
        for p, label in preds:
            self.g.flow[p].append((node, label))

    def statement_node(self, item, text_node: A.Node, is_cond: bool = False) -> int:
        """Create the node for a simple statement, a condition or a for-step."""
        du = _DefUse(self.skip)
        props: dict = {}
        call = None
        if is_cond:
            du.use(item)
            kind = NodeKind.COND
        elif isinstance(item, A.Return):
            du.use(item.value)
            kind = NodeKind.RET
        elif isinstance(item, A.Decl):
            du.defs.add(item.name)
            du.use(item.array)
            du.use(item.init)
            call = primary_call(item)
            kind = NodeKind.AD if item.is_array else NodeKind.DECL
            props["var"] = item.name
            if item.is_array:
                count = self._array_count(item, self.consts)
                props["len"] = count * self.sizes.of_type(item.type, self.ast.typedefs)
        else:
            expr = item.expr if isinstance(item, A.ExprStmt) else item
            du.use(expr)
            call = primary_call(item)
            bare = strip(expr)
            kind = NodeKind.CALL if isinstance(bare, A.Call) else NodeKind.ASSIGN
            if isinstance(bare, A.Assign) and bare.op == "=":
                target = ident_name(bare.target)
                if target is not None:
                    props["var"] = target
        if call is not None and call.callee in ALL_APIS and kind is not NodeKind.AD:
            kind = self._call_props(call, props, item)
        if du.index:
            props["arg_index"] = tuple((a.buffer, a.index, a.mode) for a in du.index)
        n = self.new_node(kind, self.ast.line(text_node), _collapse(self.ast.text(text_node)),
                          stmt=item, **props)
        if call is not None:
            self.g.call[n] = call
        self.g.defs[n] = frozenset(du.defs)
        self.g.uses[n] = frozenset(du.uses)
        self.index_access[n] = tuple(du.index)
        return n

    def _count(self, call: A.Call, role) -> ConstValue:
        if role.count is None:
            if call.callee == "strcpy" and len(call.args) > 1:
                src = strip(call.args[1])
                if isinstance(src, A.StrLit):
                    return src.length + 1
            return UNKNOWN
        if role.count >= len(call.args):
            return UNKNOWN
        n = self.consts.eval(call.args[role.count])
        return n * self.sizes.wchar if role.wide else n

    def _call_props(self, call: A.Call, props: dict, item) -> NodeKind:
        name = call.callee
        role = ALL_APIS[name]
        props["callee"] = name
        props["api_class"] = role.api_class
        if name in ALLOC_APIS:
            args = call.args
            if name == "calloc":
                size = self.consts.eval(args[0]) * self.consts.eval(args[1]) if len(args) == 2 else UNKNOWN
            else:
                size = self.consts.eval(args[0]) if args else UNKNOWN
            props["len"] = size
            return NodeKind.AF
        if name in FREE_APIS:
            var = ident_name(call.args[0]) if call.args else None
            props["var"] = var if var is not None else ABSENT
            return NodeKind.FREE
        if role.dest is not None and role.dest < len(call.args):
            props["arg_dest"] = ident_name(call.args[role.dest]) or ABSENT
        if role.src is not None and role.src < len(call.args):
            props["arg_src"] = ident_name(call.args[role.src]) or ABSENT
        if name in READ_APIS:
            if role.count is not None:
                props["arg_count"] = self._count(call, role)
            return NodeKind.RF
        props["arg_count"] = self._count(call, role)
        return NodeKind.WF if name in WRITE_APIS else NodeKind.CF

    # -- control flow --------------------------------------------------------------
    def stmt(self, s: A.Stmt, preds: list[tuple[int, str]]) -> list[tuple[int, str]]:
        if isinstance(s, A.Block):
            for child in s.stmts:
                preds = self.stmt(child, preds)
            return preds
        if isinstance(s, A.Empty):
            return preds
        if isinstance(s, (A.Decl, A.ExprStmt)):
            n = self.statement_node(s, s)
            self.connect(preds, n)
            return [(n, "")]
        if isinstance(s, A.Return):
            n = self.statement_node(s, s)
            self.connect(preds, n)
            self.pending_returns.append(n)
            return []
        if isinstance(s, A.If):
            c = self.statement_node(s.cond, s.cond, is_cond=True)
            self.g.stmt[c] = s
            self.connect(preds, c)
            out = self.stmt(s.then, [(c, "T")])
            if s.orelse is not None:
                out = out + self.stmt(s.orelse, [(c, "F")])
            else:
                out = out + [(c, "F")]
            return out
        if isinstance(s, A.While):
            c = self.statement_node(s.cond, s.cond, is_cond=True)
            self.g.stmt[c] = s
            self.connect(preds, c)
            self.connect(self.stmt(s.body, [(c, "T")]), c)
            return [(c, "F")]
        if isinstance(s, A.For):
            if s.init is not None:
                i = self.statement_node(s.init, s.init)
                self.connect(preds, i)
                preds = [(i, "")]
            c = self.statement_node(s.cond, s.cond, is_cond=True)
            self.g.stmt[c] = s
            self.connect(preds, c)
            body_out = self.stmt(s.body, [(c, "T")])
            if s.step is not None:
                st = self.statement_node(s.step, s.step)
                self.connect(body_out, st)
                body_out = [(st, "")]
            self.connect(body_out, c)
            return [(c, "F")]
        raise UnsupportedConstruct(s)

    def build(self) -> PropertyGraph:
        g = self.g
        fn = self.fn
        params = frozenset(p.name for p in fn.params if p.name)
        g.entry = self.new_node(NodeKind.ENTRY, self.ast.tokens[fn.first].line, fn.name)
        g.defs[g.entry] = params
        g.uses[g.entry] = frozenset()
        self.pending_returns: list[int] = []
        out = self.stmt(fn.body, [(g.entry, "")])
        g.exit = self.new_node(NodeKind.EXIT, self.ast.tokens[fn.body.last].line, fn.name)
        g.defs[g.exit] = frozenset()
        g.uses[g.exit] = frozenset()
        self.connect(out + [(r, "") for r in self.pending_returns], g.exit)
        self._def_use_edges()
        self._data_dependence()
        ipdom = self._post_dominance()
        self._control_dependence(ipdom)
        return g

    # -- edges -----------------------------------------------------------------------
    def _def_use_edges(self) -> None:
        g = self.g
        names = sorted(set().union(*g.defs.values(), *g.uses.values()))
        for name in names:
            g.var_nodes[name] = self.new_node(NodeKind.VAR, ABSENT, name, var=name)
            del g.flow[g.var_nodes[name]]
        for n in list(g.defs):
            for v in sorted(g.defs[n]):
                g.add_edge(n, g.var_nodes[v], EdgeKind.DEF)
            for v in sorted(g.uses[n]):
                g.add_edge(n, g.var_nodes[v], EdgeKind.USE)

    def _data_dependence(self) -> None:
        g = self.g
        order = sorted(g.flow)
        def_list: list[tuple[int, str]] = []
        gen: dict[int, int] = {}
        by_var: dict[str, int] = {}
        for n in order:
            bits = 0
            for v in sorted(g.defs.get(n, ())):
                k = len(def_list)
                def_list.append((n, v))
                bits |= 1 << k
                by_var[v] = by_var.get(v, 0) | (1 << k)
            gen[n] = bits
        kill = {n: 0 for n in order}
        for n in order:
            for v in g.defs.get(n, ()):
                kill[n] |= by_var[v]
        preds: dict[int, list[int]] = {n: [] for n in order}
        for n in order:
            for s, _ in g.flow[n]:
                preds[s].append(n)
        rd_in = {n: 0 for n in order}
        rd_out = {n: gen[n] for n in order}
        work = list(order)
        queued = set(order)
        while work:
            n = work.pop(0)
            queued.discard(n)
            acc = 0
            for p in preds[n]:
                acc |= rd_out[p]
            rd_in[n] = acc
            new_out = gen[n] | (acc & ~kill[n])
            if new_out != rd_out[n]:
                rd_out[n] = new_out
                for s, _ in g.flow[n]:
                    if s not in queued:
                        work.append(s)
                        queued.add(s)
        for n in order:
            uses = g.uses.get(n, ())
            if not uses:
                continue
            bits = rd_in[n]
            for v in sorted(uses):
                reach = bits & by_var.get(v, 0)
                k = 0
                while reach:
                    if reach & 1:
                        src, _ = def_list[k]
                        g.add_edge(src, n, EdgeKind.DD, v)
                    reach >>= 1
                    k += 1

    def _post_dominance(self) -> dict[int, int]:
        g = self.g
        order = sorted(g.flow)
        pos = {n: k for k, n in enumerate(order)}
        full = (1 << len(order)) - 1
        pdom = {n: full for n in order}
        pdom[g.exit] = 1 << pos[g.exit]
        changed = True
        while changed:
            changed = False
            for n in reversed(order):
                if n == g.exit:
                    continue
                succ = g.flow[n]
                acc = full
                for s, _ in succ:
                    acc &= pdom[s]
                if not succ:
                    acc = 0
                new = acc | (1 << pos[n])
                if new != pdom[n]:
                    pdom[n] = new
                    changed = True
        ipdom: dict[int, int] = {}
        for n in order:
            if n == g.exit:
                continue
            strict = pdom[n] & ~(1 << pos[n])
            target = bin(strict).count("1")
            for m in order:
                if strict >> pos[m] & 1 and bin(pdom[m]).count("1") == target:
                    ipdom[n] = m
                    break
        for n in order:
            if n in ipdom:
                g.add_edge(n, ipdom[n], EdgeKind.PD)
        self.pdom_bits = (pdom, pos)
        return ipdom

    def _control_dependence(self, ipdom: dict[int, int]) -> None:
        g = self.g
        for u in sorted(g.flow):
            succ = g.flow[u]
            if len(succ) < 2:
                continue
            stop = ipdom.get(u)
            for w, label in succ:
                runner = w
                while runner is not None and runner != stop:
                    g.add_edge(u, runner, EdgeKind.CD, label)
                    runner = ipdom.get(runner)


def build_cpg(ast: A.Ast, function: A.FunctionDef | str,
              sizes: SizeofModel = DEFAULT_SIZEOF) -> PropertyGraph:
    """Build the abridged CPG of one function of ``ast``."""
    fn = ast.function(function) if isinstance(function, str) else function
    b = _Builder(ast, fn, sizes)
    g = b.build()
    g.index_access = b.index_access
    g.consts = b.consts
    g.ast = ast
    return g


def build_all(ast: A.Ast, sizes: SizeofModel = DEFAULT_SIZEOF) -> list[PropertyGraph]:
    return [build_cpg(ast, fn, sizes) for fn in ast.functions]


def buffer_len_bytes(node: int, g: PropertyGraph) -> ConstValue:
    """Byte length of the buffer an AD or AF node creates."""
    if g.kind(node) not in (NodeKind.AD, NodeKind.AF):
        raise ValueError(f"node {node} is {g.kind(node).value}, not AD/AF")
    value = g.get(node, K.LEN)
    return UNKNOWN if value is ABSENT else value
