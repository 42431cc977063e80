"""Whole-file analysis, sample annotation and agreement with SARD comments."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import AbstractSet, Iterable, Mapping, Optional, Sequence

from ..cpg.builder import UnsupportedConstruct, build_cpg
from ..cpg.consts import DEFAULT_SIZEOF, SizeofModel
from ..cpg.graph import PropertyGraph
from ..frontend import ast as A
from ..frontend.annotations import AnnotationKind, SardAnnotation, extract_annotations
from ..frontend.lexer import CSyntaxError
from ..frontend.parser import parse
from ..frontend.sample import CodeSample
from .features import FeatureId, FeatureWitness
from .rules import detect_all

SCHEMA_VERSION = 1
LINE_TOLERANCE = 1


class AnalysisError(ValueError):
    """The sample falls outside the supported subset."""

    def __init__(self, sample_id: str, line: int, message: str):
        super().__init__(f"{sample_id}:{line}: {message}")
        self.sample_id = sample_id
        self.line = line
        self.message = message


@dataclass
class Analysis:
    ast: A.Ast
    graphs: list[PropertyGraph]
    witnesses: list[FeatureWitness]


def analyze_source(source: str, vulnerable_lines: Optional[AbstractSet[int]] = None,
                   sample_id: str = "", sizes: SizeofModel = DEFAULT_SIZEOF) -> Analysis:
    """Parse, build one CPG per function and run all ten rules.

    Raises :class:`AnalysisError` for sources outside the subset.
    """
    try:
        ast = parse(source)
        graphs = [build_cpg(ast, fn, sizes) for fn in ast.functions]
    except CSyntaxError as exc:
        raise AnalysisError(sample_id, exc.line, exc.message) from exc
    except UnsupportedConstruct as exc:
        raise AnalysisError(sample_id, ast.line(exc.node), str(exc)) from exc
    witnesses: list[FeatureWitness] = []
    for g in graphs:
        witnesses.extend(detect_all(g, vulnerable_lines, sample_id))
    return Analysis(ast, graphs, witnesses)


def detect_source(source: str, vulnerable_lines: Optional[AbstractSet[int]] = None,
                  sample_id: str = "", sizes: SizeofModel = DEFAULT_SIZEOF) -> list[FeatureWitness]:
    return analyze_source(source, vulnerable_lines, sample_id, sizes).witnesses


@dataclass(frozen=True)
class AnnotatedSample:
    sample: CodeSample
    witnesses: tuple[FeatureWitness, ...]

    @property
    def features(self) -> list[FeatureId]:
        return sorted({w.feature for w in self.witnesses}, key=lambda f: f.order)

    def records(self) -> list[dict]:
        return [dict(w.to_dict(), schema_version=SCHEMA_VERSION) for w in self.witnesses]


def annotate_sample(sample: CodeSample, witnesses: Iterable[FeatureWitness]) -> Optional[AnnotatedSample]:
    """Attach witnesses to a sample; ``None`` when there are none, so the
    sample stays out of the perturbation corpus."""
    ws = tuple(witnesses)
    if not ws:
        return None
    for w in ws:
        if w.sample_id != sample.sample_id:
            raise ValueError(f"witness for {w.sample_id!r} attached to {sample.sample_id!r}")
    return AnnotatedSample(sample, ws)


def dump_witnesses(witnesses: Iterable[FeatureWitness]) -> str:
    return "".join(json.dumps(dict(w.to_dict(), schema_version=SCHEMA_VERSION), sort_keys=True) + "\n"
                   for w in witnesses)


def load_witnesses(text: str) -> list[FeatureWitness]:
    out = []
    for line in text.splitlines():
        if line.strip():
            record = json.loads(line)
            if record.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
                raise ValueError(f"unsupported schema_version {record['schema_version']}")
            out.append(FeatureWitness.from_dict(record))
    return out


# -- validation ------------------------------------------------------------------

FLAW_KINDS = (AnnotationKind.FLAW, AnnotationKind.POTENTIAL_FLAW)


@dataclass(frozen=True)
class SampleAgreement:
    sample_id: str
    witness_lines: tuple[tuple[str, int], ...]       # (feature, anchor line)
    flaw_lines: tuple[int, ...]
    agree: bool
    unmatched_witnesses: tuple[tuple[str, int], ...] = ()
    unmatched_flaws: tuple[int, ...] = ()


@dataclass(frozen=True)
class ValidationReport:
    samples: tuple[SampleAgreement, ...]
    skipped: tuple[str, ...] = field(default=())      # no SARD annotations at all

    @property
    def considered(self) -> int:
        return len(self.samples)

    @property
    def agreed(self) -> int:
        return sum(s.agree for s in self.samples)

    @property
    def rate(self) -> Optional[Fraction]:
        """Agreement rate, ``None`` when no sample carries annotations."""
        if not self.samples:
            return None
        return Fraction(self.agreed, len(self.samples))

    @property
    def disagreements(self) -> list[SampleAgreement]:
        return [s for s in self.samples if not s.agree]


def _near(a: int, b: int) -> bool:
    return abs(a - b) <= LINE_TOLERANCE


def validate_against_sard(annotated: Sequence[AnnotatedSample | CodeSample],
                          sard: Optional[Mapping[str, Sequence[SardAnnotation]]] = None
                          ) -> ValidationReport:
    """Compare witness anchors with FLAW / POTENTIAL FLAW comment lines.

    A sample agrees when every witness lands within one line of a flaw
    comment's target and every flaw comment is matched by some witness.
    ``sard`` maps sample ids to annotations; missing ids are extracted from
    the sample source. Plain :class:`CodeSample` entries have no witnesses.
    """
    rows: list[SampleAgreement] = []
    skipped: list[str] = []
    for item in annotated:
        if isinstance(item, AnnotatedSample):
            sample, witnesses = item.sample, item.witnesses
        else:
            sample, witnesses = item, ()
        notes = sard.get(sample.sample_id) if sard is not None else None
        if notes is None:
            notes = extract_annotations(sample.source)
        if not notes:
            skipped.append(sample.sample_id)
            continue
        flaws = tuple(sorted({a.line for a in notes if a.kind in FLAW_KINDS}))
        anchors = tuple((w.feature.value, w.anchor_line) for w in witnesses)
        bad_w = tuple(a for a in anchors if not any(_near(a[1], f) for f in flaws))
        bad_f = tuple(f for f in flaws if not any(_near(a[1], f) for a in anchors))
        rows.append(SampleAgreement(sample.sample_id, anchors, flaws,
                                    not bad_w and not bad_f, bad_w, bad_f))
    return ValidationReport(tuple(rows), tuple(skipped))
