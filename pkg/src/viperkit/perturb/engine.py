"""Per-sample driver: detect, perturb, self-check."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from ..cpg.consts import DEFAULT_SIZEOF, SizeofModel
from ..detect.analysis import AnalysisError, analyze_source, annotate_sample
from ..detect.features import FeatureId, FeatureWitness
from ..frontend.sample import CodeSample
from .sf import gen_sf_all
from .variant import (PerturbedVariant, UneditableWitness, VariantKind, check_variant)
from .vf import gen_vf_perturbations


@dataclass
class PerturbResult:
    sample_id: str
    witnesses: list[FeatureWitness] = field(default_factory=list)
    variants: list[PerturbedVariant] = field(default_factory=list)
    failed: list[tuple[PerturbedVariant, str]] = field(default_factory=list)
    uneditable: list[UneditableWitness] = field(default_factory=list)
    error: Optional[str] = None


def perturb_sample(sample: CodeSample, features: Optional[Iterable[FeatureId]] = None,
                   sf: bool = True, diagnostics: bool = False,
                   vulnerable_lines_known: bool = True,
                   sizes: SizeofModel = DEFAULT_SIZEOF) -> PerturbResult:
    """All variants of one sample, each re-detected before it is kept.

    Variants that fail their kill/keep/neutrality check land in ``failed``.
    """
    result = PerturbResult(sample.sample_id)
    lines = sample.vulnerable_lines if vulnerable_lines_known else None
    try:
        analysis = analyze_source(sample.source, lines, sample.sample_id, sizes)
    except AnalysisError as exc:
        result.error = str(exc)
        return result
    result.witnesses = analysis.witnesses
    chosen = set(features) if features is not None else None
    candidates: list[PerturbedVariant] = []
    annotated = annotate_sample(sample, analysis.witnesses)
    if annotated is not None:
        candidates += gen_vf_perturbations(annotated, analysis, chosen, diagnostics,
                                           result.uneditable)
    if sf:
        candidates += [v for v in gen_sf_all(sample) if not v.noop]
    for v in candidates:
        if v.kind.is_sf and not vulnerable_lines_known:
            v = _without_lines(v)
        check = check_variant(v, analysis.witnesses, sizes)
        if check.ok:
            result.variants.append(v)
        else:
            result.failed.append((v, check.reason))
    return result


def _without_lines(v: PerturbedVariant) -> PerturbedVariant:
    return replace(v, check_lines=None, vulnerable_lines=frozenset())
