"""SARD-style FLAW / POTENTIAL FLAW / FIX comment extraction."""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass


class AnnotationKind(str, enum.Enum):
    FLAW = "FLAW"
    POTENTIAL_FLAW = "POTENTIAL FLAW"
    FIX = "FIX"


@dataclass(frozen=True)
class SardAnnotation:
    kind: AnnotationKind
    line: int
    text: str


# strings are matched so that comment markers inside them are skipped
_SCAN = re.compile(
    r'"(?:\\.|[^"\\\n])*"'
    r"|'(?:\\.|[^'\\\n])*'"
    r"|/\*.*?\*/"
    r"|//[^\n]*",
    re.S,
)
_PREFIX = re.compile(r"(POTENTIAL FLAW|FLAW|FIX)(?![A-Za-z0-9_])")
_WS = re.compile(r"\s+")


def _comment_body(comment: str) -> str:
    if comment.startswith("/*"):
        return comment[2:-2]
    return comment[2:]


def _next_code_offset(source: str, i: int) -> int:
    n = len(source)
    while i < n:
        m = _WS.match(source, i)
        if m:
            i = m.end()
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            i = n if j < 0 else j + 2
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            i = n if j < 0 else j
            continue
        return i
    return -1


def extract_annotations(source: str) -> list[SardAnnotation]:
    """Return one record per FLAW / POTENTIAL FLAW / FIX comment.

    The record's line is the first code line following the comment. Comments
    with no code after them anchor to their own last line.
    """
    out = []
    for m in _SCAN.finditer(source):
        tok = m.group()
        if not tok.startswith("/"):
            continue
        body = _comment_body(tok)
        pm = _PREFIX.match(body.lstrip())
        if pm is None:
            continue
        nxt = _next_code_offset(source, m.end())
        anchor = nxt if nxt >= 0 else m.end() - 1
        line = source.count("\n", 0, anchor) + 1
        out.append(SardAnnotation(AnnotationKind(pm.group(1)), line, body.strip()))
    return out
