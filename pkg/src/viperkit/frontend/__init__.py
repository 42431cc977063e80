"""C-subset front end: lexing, parsing, annotations, rewriting, formatting."""
from .annotations import AnnotationKind, SardAnnotation, extract_annotations
from .ast import Ast, Span
from .edits import (DeleteLine, EditError, InsertBefore, OutOfBoundsError, OverlapError,
                    ReplaceLine, ReplaceSpan, apply_edits, line_map)
from .formatting import normalize_formatting, pretty
from .lexer import CSyntaxError, token_texts, tokenize
from .parser import parse

__all__ = [
    "AnnotationKind", "SardAnnotation", "extract_annotations", "Ast", "Span",
    "DeleteLine", "EditError", "InsertBefore", "OutOfBoundsError", "OverlapError",
    "ReplaceLine", "ReplaceSpan", "apply_edits", "line_map", "normalize_formatting",
    "pretty", "CSyntaxError", "token_texts", "tokenize", "parse",
]
