"""Line-anchored source rewriting."""
from __future__ import annotations

import bisect
import re
from dataclasses import dataclass
from typing import Sequence, Union

from .ast import Span


class EditError(ValueError):
    pass


class OverlapError(EditError):
    pass


class OutOfBoundsError(EditError):
    pass


@dataclass(frozen=True)
class ReplaceLine:
    line: int
    text: str


@dataclass(frozen=True)
class InsertBefore:
    """Insert ``text`` as a new line above ``line``.

    Text without leading whitespace inherits the indentation of ``line``.
    """
    line: int
    text: str


@dataclass(frozen=True)
class ReplaceSpan:
    start: int
    end: int
    text: str

    @classmethod
    def of(cls, span: Span, text: str) -> "ReplaceSpan":
        return cls(span.start, span.end, text)


@dataclass(frozen=True)
class DeleteLine:
    line: int


Edit = Union[ReplaceLine, InsertBefore, ReplaceSpan, DeleteLine]
EditScript = Sequence[Edit]


def line_starts(source: str) -> list[int]:
    return [0] + [m.end() for m in re.finditer("\n", source)]


def _line_count(source: str) -> int:
    return source.count("\n") + (0 if source.endswith("\n") or not source else 1)


def _resolve(source: str, starts: list[int], edit: Edit) -> tuple[int, int, str, bool]:
    """Map an edit to (start, end, replacement, deletes_lines)."""
    n_lines = _line_count(source)
    if isinstance(edit, ReplaceSpan):
        if not 0 <= edit.start <= edit.end <= len(source):
            raise OutOfBoundsError(f"span {edit.start}:{edit.end} outside source")
        return edit.start, edit.end, edit.text, False
    if not 1 <= edit.line <= max(n_lines, 1):
        raise OutOfBoundsError(f"line {edit.line} outside 1..{n_lines}")
    a = starts[edit.line - 1]
    nl = source.find("\n", a)
    b = len(source) if nl < 0 else nl
    if isinstance(edit, ReplaceLine):
        return a, b, edit.text, False
    if isinstance(edit, DeleteLine):
        return a, (len(source) if nl < 0 else nl + 1), "", True
    text = edit.text
    if text[:1] not in (" ", "\t"):
        indent = re.match(r"[ \t]*", source[a:b]).group()
        text = indent + text
    return a, a, text + "\n", False


def _sorted_ranges(source: str, script: EditScript):
    starts = line_starts(source)
    ranges = [(*_resolve(source, starts, e), k) for k, e in enumerate(script)]
    ranges.sort(key=lambda r: (r[0], r[1], r[4]))
    for prev, cur in zip(ranges, ranges[1:]):
        pa, pb = prev[0], prev[1]
        ca, cb = cur[0], cur[1]
        if pa == pb or ca == cb:
            # a zero-width insertion only conflicts when strictly inside a range
            x, (a, b) = (pa, (ca, cb)) if pa == pb else (ca, (pa, pb))
            if a < x < b:
                raise OverlapError(f"insertion at {x} inside edited range {a}:{b}")
        elif ca < pb:
            raise OverlapError(f"edits {script[prev[4]]!r} and {script[cur[4]]!r} overlap")
    return ranges


def apply_edits(source: str, script: EditScript) -> str:
    """Apply ``script`` to ``source``; untouched bytes are copied verbatim."""
    if not script:
        return source
    out = []
    pos = 0
    for a, b, text, _, _ in _sorted_ranges(source, script):
        out.append(source[pos:a])
        out.append(text)
        pos = b
    out.append(source[pos:])
    return "".join(out)


def line_map(source: str, script: EditScript) -> dict[int, int | None]:
    """Map each original line number to its line in the edited text.

    Lines removed by :class:`DeleteLine` map to ``None``; lines swallowed by
    a multi-line replacement map to the replacement's first line.
    """
    starts = line_starts(source)[:_line_count(source)]
    ranges = _sorted_ranges(source, script) if script else []
    offsets: list[int | None] = []
    li = 0
    pos = new_pos = 0
    for a, b, text, deletes, _ in ranges:
        while li < len(starts) and starts[li] < a:
            offsets.append(new_pos + starts[li] - pos)
            li += 1
        new_pos += a - pos
        rep_start = new_pos
        new_pos += len(text)
        while li < len(starts) and starts[li] < b:
            offsets.append(None if deletes else rep_start)
            li += 1
        pos = b
    while li < len(starts):
        offsets.append(new_pos + starts[li] - pos)
        li += 1
    new_starts = line_starts(apply_edits(source, script))
    return {k + 1: (None if off is None else bisect.bisect_right(new_starts, off))
            for k, off in enumerate(offsets)}
