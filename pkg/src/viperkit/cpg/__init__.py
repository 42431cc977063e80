"""Abridged code property graph: construction, properties, constants."""
from .apis import ALL_APIS, LIBRARY_NAMES, READ_APIS, WRITE_APIS
from .builder import (IndexAccess, UnsupportedConstruct, build_all, build_cpg,
                      buffer_len_bytes, ident_name, primary_call, strip)
from .consts import (DEFAULT_SIZEOF, LP64, UNKNOWN, ConstEvaluator, ConstValue,
                     SizeofModel, VarInfo, eval_const)
from .export import export_text
from .graph import (ABSENT, Edge, EdgeKind, NodeKind, PropertyGraph, PropertyKey,
                    UnknownTarget, clone_graph, mu_get, mu_set)

__all__ = [
    "ABSENT", "ALL_APIS", "ConstEvaluator", "ConstValue", "DEFAULT_SIZEOF", "Edge",
    "EdgeKind", "IndexAccess", "LIBRARY_NAMES", "LP64", "NodeKind", "PropertyGraph",
    "PropertyKey", "READ_APIS", "SizeofModel", "UNKNOWN", "UnknownTarget",
    "UnsupportedConstruct", "VarInfo", "WRITE_APIS", "buffer_len_bytes", "build_all",
    "build_cpg", "clone_graph", "eval_const", "export_text", "ident_name", "mu_get",
    "mu_set", "primary_call", "strip",
]
