"""Variant records, ground-truth labels and the kill/keep self-check."""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import AbstractSet, Iterable, Mapping, Optional, Sequence

from ..cpg.consts import DEFAULT_SIZEOF, SizeofModel
from ..detect.analysis import AnalysisError, detect_source
from ..detect.features import FeatureId, FeatureWitness
from ..frontend.sample import Label


class VariantKind(str, enum.Enum):
    FPP = "FPP"
    FEP = "FEP"
    SF_NODE_SET = "SF_NODE_SET"
    SF_EDGE_SET = "SF_EDGE_SET"
    SF_IDENTIFIER = "SF_IDENTIFIER"
    SF_FORMATTING = "SF_FORMATTING"
    DIAGNOSTIC = "DIAGNOSTIC"

    @property
    def is_sf(self) -> bool:
        return self.value.startswith("SF_")


SF_KINDS = (VariantKind.SF_NODE_SET, VariantKind.SF_EDGE_SET,
            VariantKind.SF_IDENTIFIER, VariantKind.SF_FORMATTING)


class UneditableWitness(Exception):
    """A recipe could not locate or rewrite the tokens it needs."""

    def __init__(self, witness: Optional[FeatureWitness], recipe: str, reason: str):
        super().__init__(f"{recipe}: {reason}")
        self.witness = witness
        self.recipe = recipe
        self.reason = reason


@dataclass(frozen=True)
class PerturbedVariant:
    variant_id: str
    sample_id: str
    kind: VariantKind
    feature: Optional[FeatureId]
    source: str
    expected_label: Optional[Label]
    recipe: str
    vulnerable_lines: frozenset[int] = frozenset()
    partial: bool = False          # FEP removing one of several witnesses
    noop: bool = False             # SF variant identical to its parent
    # original line -> variant line; used to re-anchor witnesses
    line_mapping: Mapping[int, Optional[int]] = field(default_factory=dict, compare=False, repr=False)
    # original line set carried for re-detection even when the label is cleared
    check_lines: Optional[frozenset[int]] = field(default=None, compare=False, repr=False)
    symbols: Mapping[str, str] = field(default_factory=dict, compare=False, repr=False)
    target: Optional[FeatureWitness] = field(default=None, compare=False, repr=False)

    @property
    def file_name(self) -> str:
        return f"{self.variant_id}.c"

    def manifest_record(self) -> dict:
        return {
            "variant_id": self.variant_id,
            "sample_id": self.sample_id,
            "kind": self.kind.value,
            "feature": self.feature.value if self.feature else None,
            "expected_label": self.expected_label.value if self.expected_label else None,
            "recipe": self.recipe,
            "vulnerable_lines": sorted(self.vulnerable_lines),
            "partial": self.partial,
            "noop": self.noop,
            "path": self.file_name,
        }


def variant_id(sample_id: str, feature: Optional[FeatureId], kind: VariantKind, k: int) -> str:
    return f"{sample_id}__{feature.value if feature else 'NONE'}__{kind.value}__{k}"


def fep_label(original: Label, witness_count: int) -> tuple[Label, bool]:
    """Label of an FEP variant and whether elimination is partial."""
    if witness_count <= 1:
        return Label.NON_VULNERABLE, False
    return original, True


def remap_lines(lines: Iterable[int], mapping: Mapping[int, Optional[int]]) -> frozenset[int]:
    out = set()
    for n in lines:
        m = mapping.get(n, n) if mapping else n
        if m is not None:
            out.add(m)
    return frozenset(out)


def witness_signature(w: FeatureWitness, mapping: Mapping[int, Optional[int]] | None = None,
                      symbols: Mapping[str, str] | None = None, with_api: bool = True) -> tuple:
    """Comparable form of a witness after re-anchoring lines and renaming."""
    mapping = mapping or {}
    symbols = symbols or {}
    lines = tuple(sorted((k, mapping.get(v, v) if mapping else v) for k, v in w.lines.items()))
    names = tuple(sorted((k, symbols.get(v, v)) for k, v in w.vars.items()
                         if with_api or k != "api"))
    return (symbols.get(w.function, w.function), w.feature.value, lines, names,
            tuple(sorted(w.constants.items())))


def _redetect(v: PerturbedVariant, sizes: SizeofModel) -> list[FeatureWitness]:
    lines = v.check_lines if v.check_lines is not None else v.vulnerable_lines
    return detect_source(v.source, lines, v.sample_id, sizes)


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    reason: str = ""


def check_variant(v: PerturbedVariant, original: Sequence[FeatureWitness],
                  sizes: SizeofModel = DEFAULT_SIZEOF) -> CheckResult:
    """Re-detect ``v`` and verify the property its kind promises.

    FEP: the target witness is gone and the target feature count dropped.
    FPP: a witness of the target feature sits on the re-anchored lines.
    SF: the full witness multiset is unchanged up to re-anchoring/renaming.
    """
    try:
        found = _redetect(v, sizes)
    except AnalysisError as exc:
        return CheckResult(False, f"variant does not parse: {exc}")
    if v.kind.is_sf:
        before = Counter(witness_signature(w, v.line_mapping, v.symbols) for w in original)
        after = Counter(witness_signature(w) for w in found)
        return CheckResult(before == after, "" if before == after else "witness set changed")
    if v.kind is VariantKind.DIAGNOSTIC or v.target is None:
        return CheckResult(True)
    t = v.target
    want = witness_signature(t, v.line_mapping, with_api=False)[:4]
    same = [w for w in found if w.feature is t.feature
            and witness_signature(w, with_api=False)[:4] == want]
    if v.kind is VariantKind.FPP:
        return CheckResult(bool(same), "" if same else "target witness lost")
    anchor = v.line_mapping.get(t.anchor_line, t.anchor_line)
    before = sum(w.feature is t.feature for w in original)
    after = [w for w in found if w.feature is t.feature]
    killed = len(after) < before and not any(w.anchor_line == anchor for w in after)
    return CheckResult(killed, "" if killed else "target feature survived")
