"""Per-detector evaluation reports: building, JSON round-trip, text table."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from ..detect.features import FeatureId
from ..frontend.sample import Label
from .metrics import (DEFAULT_EPSILON, DEFAULT_FEP_FLOOR, AccuracyDelta, DetectorCategory,
                      MissingPrediction, Rate, SatisfactionResult, VariantEntry, classify,
                      confusion, fpp_mean, fraction_text, parse_fraction, render_percent,
                      satisfaction)
from .predictions import PredictionRecord

REPORT_SCHEMA_VERSION = 1
VF_ROWS = tuple(f.value for f in FeatureId)
SF_ROWS = ("SF_NODE_SET", "SF_EDGE_SET", "SF_IDENTIFIER", "SF_FORMATTING")


@dataclass(frozen=True)
class CorpusSummary:
    samples: int = 0
    annotated: int = 0
    variants: int = 0
    skipped: tuple[str, ...] = ()
    disabled_rules: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"samples": self.samples, "annotated": self.annotated, "variants": self.variants,
                "skipped": list(self.skipped), "disabled_rules": list(self.disabled_rules)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "CorpusSummary":
        return cls(d["samples"], d["annotated"], d["variants"], tuple(d["skipped"]),
                   tuple(d["disabled_rules"]))


@dataclass(frozen=True)
class DetectorReport:
    detector_id: str
    results: tuple[SatisfactionResult, ...]
    categories: tuple[tuple[str, DetectorCategory], ...]
    fpp_reference_mean: Rate
    epsilon: Fraction
    fep_floor: Fraction
    accuracy: Optional[AccuracyDelta]

    def result(self, feature: str) -> SatisfactionResult:
        return next(r for r in self.results if r.feature == feature)

    def category(self, feature: str) -> DetectorCategory:
        return dict(self.categories)[feature]

    def to_dict(self) -> dict:
        return {"detector_id": self.detector_id,
                "results": [r.to_dict() for r in self.results],
                "categories": {f: c.to_dict() for f, c in self.categories},
                "fpp_reference_mean": fraction_text(self.fpp_reference_mean),
                "epsilon": fraction_text(self.epsilon),
                "fep_floor": fraction_text(self.fep_floor),
                "accuracy": self.accuracy.to_dict() if self.accuracy else None}

    @classmethod
    def from_dict(cls, d: Mapping) -> "DetectorReport":
        results = tuple(SatisfactionResult.from_dict(r) for r in d["results"])
        cats = d["categories"]
        # JSON keys come back sorted; restore row order
        return cls(d["detector_id"], results,
                   tuple((r.feature, DetectorCategory.from_dict(cats[r.feature]))
                         for r in results if r.feature in cats),
                   parse_fraction(d["fpp_reference_mean"]), Fraction(d["epsilon"]),
                   Fraction(d["fep_floor"]),
                   AccuracyDelta.from_dict(d["accuracy"]) if d["accuracy"] else None)


@dataclass(frozen=True)
class EvaluationReport:
    detectors: tuple[DetectorReport, ...]
    corpus: CorpusSummary = field(default_factory=CorpusSummary)
    schema_version: int = REPORT_SCHEMA_VERSION

    def detector(self, detector_id: str) -> DetectorReport:
        return next(d for d in self.detectors if d.detector_id == detector_id)

    def to_dict(self) -> dict:
        return {"schema_version": self.schema_version, "corpus": self.corpus.to_dict(),
                "detectors": [d.to_dict() for d in self.detectors]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "EvaluationReport":
        if d.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema_version {d.get('schema_version')}")
        return cls(tuple(DetectorReport.from_dict(x) for x in d["detectors"]),
                   CorpusSummary.from_dict(d["corpus"]), d["schema_version"])


def evaluate_detector(predictions: Sequence[PredictionRecord], manifest: Sequence[VariantEntry],
                      truths: Mapping[str, Label], features: Sequence[str] = VF_ROWS + SF_ROWS,
                      fpp_reference_mean: Rate = None, epsilon: Fraction | int = DEFAULT_EPSILON,
                      fep_floor: Fraction | int = DEFAULT_FEP_FLOOR,
                      include_partial: bool = False) -> DetectorReport:
    """Score one detector.

    ``predictions`` covers originals and variants alike; ``truths`` maps the
    original sample ids to their labels. When ``fpp_reference_mean`` is not
    given, the detector's own mean SR_FPP over the VF rows is used.
    """
    ids = {r.detector_id for r in predictions}
    if len(ids) > 1:
        raise ValueError(f"predictions from several detectors: {sorted(ids)}")
    detector_id = ids.pop() if ids else "unknown"
    by_id = {r.id: r for r in predictions}
    live = [v for v in manifest if not v.noop and v.kind != "DIAGNOSTIC"]
    missing = sorted({i for v in live for i in (v.sample_id, v.variant_id) if i not in by_id}
                     | {s for s in truths if s not in by_id})
    if missing:
        raise MissingPrediction(missing)
    originals = [by_id[s] for s in sorted(truths)]
    variants = [by_id[v.variant_id] for v in live]
    results = tuple(satisfaction(f, originals, variants, live, include_partial) for f in features)
    mean = fpp_reference_mean
    if mean is None:
        mean = fpp_mean(r for r in results if r.feature in VF_ROWS)
    categories = tuple((r.feature, classify(r, mean, epsilon, fep_floor))
                       for r in results if r.feature in VF_ROWS)
    variant_truths = {v.variant_id: v.expected_label for v in live if v.expected_label is not None}
    accuracy = AccuracyDelta(
        confusion(originals, truths),
        confusion([by_id[i] for i in sorted(variant_truths)], variant_truths))
    return DetectorReport(detector_id, results, categories, mean, Fraction(epsilon),
                          Fraction(fep_floor), accuracy)


# -- emission ------------------------------------------------------------------------

def dump_report(report: EvaluationReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def parse_report(text: str) -> EvaluationReport:
    return EvaluationReport.from_dict(json.loads(text))


def render_table(report: EvaluationReport) -> str:
    """Feature rows by detector columns: SR_FPP, SR_FEP and category."""
    dets = report.detectors
    header = ["Feature"]
    for d in dets:
        header += [f"{d.detector_id} FPP", f"{d.detector_id} FEP", f"{d.detector_id} cat"]
    rows = [header]
    for feature in VF_ROWS + SF_ROWS:
        row = [feature]
        present = False
        for d in dets:
            try:
                r = d.result(feature)
            except StopIteration:
                row += ["", "", ""]
                continue
            present = True
            cat = dict(d.categories).get(feature)
            row += [render_percent(r.sr_fpp), render_percent(r.sr_fep) if feature in VF_ROWS else "-",
                    cat.label if cat else ""]
        if present:
            rows.append(row)
    widths = [max(len(r[k]) for r in rows) for k in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    out = "\n".join(lines) + "\n"
    for d in dets:
        out += f"\n{d.detector_id}: FPP threshold mean {render_percent(d.fpp_reference_mean)}" \
               f" - {render_percent(d.epsilon)}, FEP floor {render_percent(d.fep_floor)}\n"
        if d.accuracy is not None:
            a = d.accuracy
            out += (f"  precision {_fmt(a.original.precision)} -> {_fmt(a.perturbed.precision)}"
                    f" (delta {_fmt(a.precision_delta)})\n"
                    f"  recall    {_fmt(a.original.recall)} -> {_fmt(a.perturbed.recall)}"
                    f" (delta {_fmt(a.recall_delta)})\n")
        excluded = sum(r.excluded_partial for r in d.results)
        if excluded:
            out += f"  partial FEP variants excluded: {excluded}\n"
    c = report.corpus
    out += (f"\ncorpus: {c.samples} samples, {c.annotated} annotated, {c.variants} variants, "
            f"{len(c.skipped)} skipped\n")
    if c.disabled_rules:
        out += f"disabled rules: {', '.join(c.disabled_rules)}\n"
    return out


def _fmt(x: Rate) -> str:
    return "-" if x is None else render_percent(x)


def emit_report(report: EvaluationReport, out_dir: str | Path,
                formats: Iterable[str] = ("structured", "table")) -> list[Path]:
    """Write report.json and/or report.txt into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt == "structured":
            path = out / "report.json"
            path.write_text(dump_report(report), encoding="utf-8")
        elif fmt == "table":
            path = out / "report.txt"
            path.write_text(render_table(report), encoding="utf-8")
        else:
            raise ValueError(f"unknown report format {fmt!r}")
        written.append(path)
    return written


def load_report(path: str | Path) -> EvaluationReport:
    return parse_report(Path(path).read_text(encoding="utf-8"))
