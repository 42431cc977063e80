"""viperkit command line.

Every flag can also come from a flat ``key=value`` file named by
``--config`` or the VIPERKIT_CONFIG environment variable; flags win.
Keys are flag names without dashes (``fep_floor=51``); ``sizeof.<type>``
keys override the sizeof model (``sizeof.int=2``, ``sizeof.pointer=4``).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .corpus import gen_corpus, load_corpus, write_corpus
from .cpg.consts import DEFAULT_SIZEOF
from .detect.features import FeatureId
from .evaluate.metrics import MissingPrediction, VariantEntry
from .evaluate.predictions import by_detector, read_predictions, write_predictions
from .evaluate.report import (SF_ROWS, VF_ROWS, CorpusSummary, EvaluationReport, emit_report,
                              dump_report, evaluate_detector, load_report, render_table)
from .frontend.sample import Label
from .pipeline import (VARIANT_MANIFEST, annotations_text, detect_corpus, lines_known, perturb_corpus,
                       predict, read_variants, validate_corpus, validation_text, write_variants)

CONFIG_ENV = "VIPERKIT_CONFIG"
PERTURB_SUMMARY = "perturb_summary.json"


class UsageError(Exception):
    pass


# -- configuration -----------------------------------------------------------------

def read_config(path: str | Path) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _percentage(text: str) -> Fraction:
    v = Fraction(text)
    if not 0 <= v <= 100:
        raise UsageError(f"threshold {text} outside [0, 100]")
    return v


def _features(text: Optional[str]) -> Optional[set[str]]:
    if not text or text == "all":
        return None
    names = {t.strip() for t in text.split(",") if t.strip()}
    unknown = names - set(VF_ROWS) - set(SF_ROWS) - {"SF"}
    if unknown:
        raise UsageError(f"unknown feature(s): {', '.join(sorted(unknown))}")
    return names


CONVERTERS = {"seed": int, "workers": int, "n": int, "epsilon": _percentage,
              "fep_floor": _percentage, "fpp_mean": _percentage, "max_skip_rate": float}
FLAGS = ("corpus", "out", "features", "epsilon", "fep_floor", "seed", "workers", "predictions",
         "format", "n", "detector", "variants", "fpp_mean", "max_skip_rate", "include_partial",
         "no_sf", "diagnostics", "report")
DEFAULTS = {"seed": 0, "workers": 1, "n": 40, "epsilon": Fraction(3), "fep_floor": Fraction(51),
            "max_skip_rate": 0.5, "format": "structured,table", "detector": "oracle",
            "include_partial": False, "no_sf": False, "diagnostics": False}
BOOLEAN = {"include_partial", "no_sf", "diagnostics"}


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Merge defaults < config file < flags and convert types."""
    path = args.config or os.environ.get(CONFIG_ENV)
    file_values = read_config(path) if path else {}
    sizes = {k.split(".", 1)[1]: int(v) for k, v in file_values.items() if k.startswith("sizeof.")}
    for key in FLAGS:
        if not hasattr(args, key):
            continue
        value = getattr(args, key)
        if value is None or (key in BOOLEAN and value is False):
            if key in file_values:
                raw = file_values[key]
                value = raw.lower() in ("1", "true", "yes", "on") if key in BOOLEAN else raw
            else:
                value = DEFAULTS.get(key)
        if value is not None and key in CONVERTERS and not isinstance(value, (Fraction, float)):
            value = CONVERTERS[key](value)
        setattr(args, key, value)
    args.sizes = DEFAULT_SIZEOF.with_overrides(sizes) if sizes else DEFAULT_SIZEOF
    return args


def _require(args, *names):
    for n in names:
        if getattr(args, n, None) in (None, ""):
            raise UsageError(f"--{n.replace('_', '-')} is required")


def _vf_features(args) -> Optional[set[FeatureId]]:
    chosen = _features(args.features)
    if chosen is None:
        return None
    return {FeatureId(f) for f in chosen if f in VF_ROWS}


def _sf_enabled(args) -> bool:
    chosen = _features(args.features)
    if args.no_sf:
        return False
    return chosen is None or "SF" in chosen or bool(chosen & set(SF_ROWS))


# -- subcommands -------------------------------------------------------------------

def cmd_gen_corpus(args) -> int:
    _require(args, "out")
    samples = gen_corpus(args.n, args.seed)
    manifest = write_corpus(args.out, samples)
    covered = sorted({s.feature for s in samples}, key=lambda f: FeatureId(f).order)
    print(f"{len(samples)} samples, features: {', '.join(covered)}")
    print(f"manifest: {manifest}")
    return 0


def cmd_detect(args) -> int:
    _require(args, "corpus", "out")
    samples = load_corpus(args.corpus)
    found, summary = detect_corpus(samples, args.sizes, _vf_features(args), args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "annotations.jsonl").write_text(annotations_text(found), encoding="utf-8")
    (out / "detect_summary.json").write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True)
                                             + "\n", encoding="utf-8")
    sys.stdout.write(summary.render())
    if summary.skip_rate > args.max_skip_rate:
        print(f"error: {len(summary.skipped)}/{summary.samples} samples could not be analyzed "
              f"(ceiling {args.max_skip_rate:g})", file=sys.stderr)
        return 1
    return 0


def cmd_validate(args) -> int:
    _require(args, "corpus")
    samples = load_corpus(args.corpus)
    found, _ = detect_corpus(samples, args.sizes, None, args.workers)
    report = validate_corpus(samples, found)
    if report.rate is None:
        print("warning: no sample carries FLAW/FIX annotations; agreement rate UNDEFINED",
              file=sys.stderr)
        print("agreement: UNDEFINED")
    else:
        print(f"agreement: {report.agreed}/{report.considered} = {float(report.rate):.2f}")
    for d in report.disagreements:
        print(f"  {d.sample_id}: witnesses {list(d.witness_lines)} flaw lines {list(d.flaw_lines)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "validation.jsonl").write_text(validation_text(report), encoding="utf-8")
    return 0


def cmd_perturb(args) -> int:
    _require(args, "corpus", "out")
    samples = load_corpus(args.corpus)
    results = perturb_corpus(samples, _vf_features(args), _sf_enabled(args), args.diagnostics,
                             args.sizes, args.workers)
    variants = [v for r in results for v in r.variants]
    failed = [(v, why) for r in results for v, why in r.failed]
    write_variants(args.out, variants)
    skipped = [r.sample_id for r in results if r.error]
    uneditable = [u for r in results for u in r.uneditable]
    counts: dict[tuple[str, str], int] = {}
    for v in variants:
        key = (v.feature.value if v.feature else "-", v.kind.value)
        counts[key] = counts.get(key, 0) + 1
    order = {f: k for k, f in enumerate(VF_ROWS + ("-",))}
    for (f, kind), n in sorted(counts.items(), key=lambda x: (order[x[0][0]], x[0][1])):
        print(f"{f}\t{kind}\t{n}")
    print(f"variants: {len(variants)}")
    summary = {"variants": len(variants), "skipped": skipped,
               "uneditable": [f"{u.witness.sample_id if u.witness else '-'}: {u}" for u in uneditable],
               "failed": [f"{v.variant_id}: {why}" for v, why in failed]}
    (Path(args.out) / PERTURB_SUMMARY).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                                  encoding="utf-8")
    if skipped:
        print(f"skipped samples: {len(skipped)}")
    if uneditable:
        print(f"uneditable witnesses: {len(uneditable)}")
    if failed:
        for v, why in failed:
            print(f"self-check failed: {v.variant_id}: {why}", file=sys.stderr)
        return 1
    return 0


def _variant_manifest(args) -> Path:
    if args.variants:
        p = Path(args.variants)
        return p / VARIANT_MANIFEST if p.is_dir() else p
    _require(args, "out")
    return Path(args.out) / VARIANT_MANIFEST


def cmd_predict(args) -> int:
    """Reference-detector predictions for the originals and all variants."""
    _require(args, "corpus", "predictions")
    samples = load_corpus(args.corpus)
    variants = read_variants(_variant_manifest(args))
    known = lines_known(samples)
    records = (predict(args.detector, samples, args.seed, known, args.sizes, args.workers)
               + predict(args.detector, variants, args.seed, known, args.sizes, args.workers))
    Path(args.predictions).parent.mkdir(parents=True, exist_ok=True)
    write_predictions(args.predictions, records)
    print(f"{len(records)} predictions from {records[0].detector_id if records else args.detector}")
    return 0


def _formats(args) -> list[str]:
    return [f.strip() for f in args.format.split(",") if f.strip()]


def cmd_evaluate(args) -> int:
    _require(args, "corpus", "predictions", "out")
    samples = load_corpus(args.corpus)
    records = [VariantEntry.from_record(v.record) for v in read_variants(_variant_manifest(args))]
    truths: dict[str, Label] = {s.sample_id: s.label for s in samples}
    rows = VF_ROWS + SF_ROWS
    chosen = _features(args.features)
    if chosen is not None:
        rows = tuple(r for r in rows if r in chosen or (r in SF_ROWS and "SF" in chosen))
    detectors = []
    try:
        for _, preds in by_detector(read_predictions(args.predictions)).items():
            detectors.append(evaluate_detector(preds, records, truths, rows, args.fpp_mean,
                                               args.epsilon, args.fep_floor, args.include_partial))
    except MissingPrediction as exc:
        print(f"error: {len(exc.ids)} missing prediction(s):", file=sys.stderr)
        for i in exc.ids:
            print(f"  {i}", file=sys.stderr)
        return 2
    summary_path = _variant_manifest(args).parent / PERTURB_SUMMARY
    skipped = ()
    if summary_path.is_file():
        skipped = tuple(json.loads(summary_path.read_text(encoding="utf-8"))["skipped"])
    corpus = CorpusSummary(
        samples=len(samples), annotated=len({r.sample_id for r in records if r.feature}),
        variants=len(records), skipped=skipped,
        disabled_rules=() if lines_known(samples) else (FeatureId.RA.value, FeatureId.WA.value))
    report = EvaluationReport(tuple(detectors), corpus)
    for path in emit_report(report, args.out, _formats(args)):
        print(f"wrote {path}")
    sys.stdout.write(render_table(report))
    return 0


def cmd_report(args) -> int:
    """Render one or more report.json files side by side."""
    paths = args.report or ([str(Path(args.out) / "report.json")] if args.out else [])
    if not paths:
        raise UsageError("--report or --out is required")
    reports = [load_report(p) for p in paths]
    merged = EvaluationReport(tuple(d for r in reports for d in r.detectors), reports[0].corpus)
    if "structured" in _formats(args) and "table" not in _formats(args):
        sys.stdout.write(dump_report(merged))
    else:
        sys.stdout.write(render_table(merged))
    return 0


COMMANDS = {"gen-corpus": cmd_gen_corpus, "detect": cmd_detect, "validate": cmd_validate,
            "perturb": cmd_perturb, "predict": cmd_predict, "evaluate": cmd_evaluate,
            "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="viperkit",
                                description="Feature-targeted perturbation of C vulnerability corpora.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help, *flags):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--config", help="key=value defaults file (overrides $VIPERKIT_CONFIG)")
        for f in flags:
            if f in BOOLEAN:
                sp.add_argument(f"--{f.replace('_', '-')}", dest=f, action="store_true", default=False)
            elif f == "report":
                sp.add_argument("--report", action="append", help="report.json path (repeatable)")
            else:
                sp.add_argument(f"--{f.replace('_', '-')}", dest=f)
        return sp

    add("gen-corpus", "write a synthetic SARD-style corpus", "out", "n", "seed")
    add("detect", "annotate a corpus with feature witnesses",
        "corpus", "out", "features", "workers", "max_skip_rate")
    add("validate", "compare witnesses with FLAW comments", "corpus", "out", "workers")
    add("perturb", "write self-checked FPP/FEP/SF variants",
        "corpus", "out", "features", "workers", "no_sf", "diagnostics")
    add("predict", "reference-detector predictions (oracle, constant_vulnerable, "
        "constant_benign, random(N))", "corpus", "out", "variants", "detector", "seed", "workers",
        "predictions")
    add("evaluate", "score predictions against variant ground truth",
        "corpus", "out", "variants", "predictions", "features", "epsilon", "fep_floor", "fpp_mean",
        "include_partial", "format", "workers")
    add("report", "render stored reports", "out", "report", "format")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        resolve(args)
        return COMMANDS[args.command](args)
    except (UsageError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
