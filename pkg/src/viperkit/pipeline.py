"""Corpus-level steps shared by the CLI: detect, validate, perturb, predict.

Per-sample work runs in a process pool when ``workers > 1``; results come
back in input order, so outputs do not depend on the worker count.
"""
from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, TypeVar

from .cpg.consts import DEFAULT_SIZEOF, SizeofModel
from .detect.analysis import (AnalysisError, AnnotatedSample, ValidationReport, annotate_sample,
                              analyze_source, dump_witnesses, validate_against_sard)
from .detect.features import FeatureId, FeatureWitness
from .evaluate.predictions import PredictionRecord
from .evaluate.reference import reference_detector
from .frontend.sample import CodeSample
from .perturb.engine import PerturbResult, perturb_sample
from .perturb.variant import PerturbedVariant

T = TypeVar("T")
R = TypeVar("R")

VARIANT_MANIFEST = "variants.jsonl"
VARIANT_DIR = "variants"


def pool_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def lines_known(samples: Iterable[CodeSample]) -> bool:
    """RA/WA need vulnerable lines; a corpus without any has none to give."""
    return any(s.vulnerable_lines for s in samples)


# -- detect ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Detection:
    sample_id: str
    witnesses: tuple[FeatureWitness, ...] = ()
    error: Optional[str] = None


def _detect_one(sample: CodeSample, use_lines: bool, sizes: SizeofModel) -> Detection:
    try:
        a = analyze_source(sample.source, sample.vulnerable_lines if use_lines else None,
                           sample.sample_id, sizes)
    except AnalysisError as exc:
        return Detection(sample.sample_id, error=str(exc))
    return Detection(sample.sample_id, tuple(a.witnesses))


@dataclass
class DetectSummary:
    samples: int = 0
    annotated: int = 0
    per_feature: dict[str, int] = field(default_factory=dict)
    skipped: list[tuple[str, str]] = field(default_factory=list)
    disabled_rules: list[str] = field(default_factory=list)

    @property
    def skip_rate(self) -> float:
        return len(self.skipped) / self.samples if self.samples else 0.0

    def to_dict(self) -> dict:
        return {"samples": self.samples, "annotated": self.annotated,
                "per_feature": self.per_feature,
                "skipped": [{"sample_id": s, "reason": r} for s, r in self.skipped],
                "disabled_rules": self.disabled_rules}

    def render(self) -> str:
        lines = [f"samples: {self.samples}", f"annotated: {self.annotated}"]
        lines += [f"{f}: {n}" for f, n in self.per_feature.items()]
        lines.append(f"skipped: {len(self.skipped)}")
        lines += [f"  {s}: {r}" for s, r in self.skipped]
        if self.disabled_rules:
            lines.append(f"disabled rules (no vulnerable lines): {', '.join(self.disabled_rules)}")
        return "\n".join(lines) + "\n"


def detect_corpus(samples: Sequence[CodeSample], sizes: SizeofModel = DEFAULT_SIZEOF,
                  features: Optional[set[FeatureId]] = None,
                  workers: int = 1) -> tuple[list[Detection], DetectSummary]:
    use_lines = lines_known(samples)
    found = pool_map(partial(_detect_one, use_lines=use_lines, sizes=sizes), list(samples), workers)
    if features is not None:
        found = [Detection(d.sample_id, tuple(w for w in d.witnesses if w.feature in features),
                           d.error) for d in found]
    counts = Counter(w.feature for d in found for w in d.witnesses)
    summary = DetectSummary(
        samples=len(samples),
        annotated=sum(bool(d.witnesses) for d in found),
        per_feature={f.value: counts.get(f, 0) for f in FeatureId
                     if features is None or f in features},
        skipped=[(d.sample_id, d.error) for d in found if d.error],
        disabled_rules=[] if use_lines else [FeatureId.RA.value, FeatureId.WA.value])
    return found, summary


def annotations_text(found: Iterable[Detection]) -> str:
    return "".join(dump_witnesses(d.witnesses) for d in found)


# -- validate --------------------------------------------------------------------------

def validate_corpus(samples: Sequence[CodeSample], found: Sequence[Detection]) -> ValidationReport:
    items = []
    for s, d in zip(samples, found):
        if d.error:
            continue
        a = annotate_sample(s, d.witnesses)
        items.append(a if a is not None else s)
    return validate_against_sard(items)


def validation_text(report: ValidationReport) -> str:
    rows = [{"sample_id": r.sample_id, "agree": r.agree,
             "witness_lines": [list(x) for x in r.witness_lines], "flaw_lines": list(r.flaw_lines),
             "unmatched_witnesses": [list(x) for x in r.unmatched_witnesses],
             "unmatched_flaws": list(r.unmatched_flaws), "schema_version": 1}
            for r in report.samples]
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)


# -- perturb ---------------------------------------------------------------------------

def _perturb_one(sample: CodeSample, features, sf: bool, diagnostics: bool, known: bool,
                 sizes: SizeofModel) -> PerturbResult:
    return perturb_sample(sample, features, sf, diagnostics, known, sizes)


def perturb_corpus(samples: Sequence[CodeSample], features: Optional[set[FeatureId]] = None,
                   sf: bool = True, diagnostics: bool = False, sizes: SizeofModel = DEFAULT_SIZEOF,
                   workers: int = 1) -> list[PerturbResult]:
    fn = partial(_perturb_one, features=features, sf=sf, diagnostics=diagnostics,
                 known=lines_known(samples), sizes=sizes)
    return pool_map(fn, list(samples), workers)


def write_variants(out_dir: str | Path, variants: Sequence[PerturbedVariant]) -> Path:
    out = Path(out_dir)
    vdir = out / VARIANT_DIR
    vdir.mkdir(parents=True, exist_ok=True)
    for v in variants:
        (vdir / v.file_name).write_text(v.source, encoding="utf-8")
    manifest = out / VARIANT_MANIFEST
    manifest.write_text("".join(json.dumps(v.manifest_record(), sort_keys=True) + "\n"
                                for v in variants), encoding="utf-8")
    return manifest


@dataclass(frozen=True)
class StoredVariant:
    """A variant read back from disk: enough to predict on and to score."""
    variant_id: str
    sample_id: str
    source: str
    vulnerable_lines: frozenset[int]
    record: dict


def read_variants(manifest: str | Path) -> list[StoredVariant]:
    manifest = Path(manifest)
    out = []
    for line in manifest.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        r = json.loads(line)
        source = (manifest.parent / VARIANT_DIR / r["path"]).read_text(encoding="utf-8")
        out.append(StoredVariant(r["variant_id"], r["sample_id"], source,
                                 frozenset(r.get("vulnerable_lines") or ()), r))
    return out


# -- predict ---------------------------------------------------------------------------

def _predict_chunk(items: Sequence, kind: str, seed: Optional[int], use_lines: bool,
                   sizes: SizeofModel) -> list[PredictionRecord]:
    return reference_detector(kind, items, seed, use_lines, sizes)


def predict(kind: str, items: Sequence, seed: Optional[int] = None, use_lines: bool = True,
            sizes: SizeofModel = DEFAULT_SIZEOF, workers: int = 1) -> list[PredictionRecord]:
    if workers <= 1 or not kind.startswith("oracle"):
        return reference_detector(kind, items, seed, use_lines, sizes)
    size = max(1, len(items) // (workers * 4))
    chunks = [list(items[i:i + size]) for i in range(0, len(items), size)]
    fn = partial(_predict_chunk, kind=kind, seed=seed, use_lines=use_lines, sizes=sizes)
    return [r for part in pool_map(fn, chunks, workers) for r in part]
