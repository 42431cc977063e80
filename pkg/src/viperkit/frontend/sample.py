"""One source file plus its ground truth."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional


class Label(str, enum.Enum):
    VULNERABLE = "vulnerable"
    NON_VULNERABLE = "non_vulnerable"


@dataclass(frozen=True)
class CodeSample:
    sample_id: str
    path: str
    label: Label
    source: str
    cwe: Optional[str] = None
    vulnerable_lines: frozenset[int] = field(default_factory=frozenset)
    feature: Optional[str] = None      # ground-truth feature id, synthetic corpora only

    def __post_init__(self):
        object.__setattr__(self, "label", Label(self.label))
        object.__setattr__(self, "vulnerable_lines", frozenset(self.vulnerable_lines))
        if self.vulnerable_lines and self.label is not Label.VULNERABLE:
            raise ValueError(f"{self.sample_id}: vulnerable lines on a non-vulnerable sample")
        total = self.source.count("\n") + (0 if self.source.endswith("\n") or not self.source else 1)
        bad = [n for n in self.vulnerable_lines if n < 1 or n > total]
        if bad:
            raise ValueError(f"{self.sample_id}: vulnerable lines {sorted(bad)} out of range")
