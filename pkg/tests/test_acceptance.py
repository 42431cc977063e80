"""Acceptance criteria 1-8. Each test prints one PASS/FAIL line, then asserts.

Run alone with ``pytest tests/test_acceptance.py`` to see the eight lines.
"""
import random
import time
from collections import Counter
from fractions import Fraction
from pathlib import Path

import pytest

import graph_oracles as O
from test_cpg import EXTRA, _expr
from viperkit.cli import main
from viperkit.corpus import gen_corpus
from viperkit.cpg import UNKNOWN, EdgeKind, build_all, eval_const
from viperkit.detect import FeatureId, detect_source
from viperkit.evaluate import (VF_ROWS, SF_ROWS, SatisfactionResult, VariantEntry,
                               evaluate_detector, reference_detector, render_percent)
from viperkit.frontend.parser import parse, parse_expression
from viperkit.frontend.sample import Label
from viperkit.perturb import SF_KINDS, VariantKind, gen_sf_all, witness_signature
from viperkit.pipeline import detect_corpus, lines_known, validate_corpus


@pytest.fixture
def report_line(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return emit


def test_criterion_1_detection_fidelity(report_line):
    t0 = time.perf_counter()
    corpus = gen_corpus(40, seed=0)
    found, _ = detect_corpus(corpus)
    validation = validate_corpus(corpus, found)
    elapsed = time.perf_counter() - t0
    per = Counter((s.feature, s.label) for s in corpus)
    shape = (len(corpus) >= 40 and {s.feature for s in corpus} == set(VF_ROWS)
             and all(per[f, Label.VULNERABLE] >= 2 and per[f, Label.NON_VULNERABLE] >= 2
                     for f in VF_ROWS))
    bad = []
    for f in VF_ROWS:
        tp = fp = fn = 0
        for s, d in zip(corpus, found):
            hit = any(w.feature.value == f for w in d.witnesses)
            truth = s.label is Label.VULNERABLE and s.feature == f
            tp += hit and truth
            fp += hit and not truth
            fn += truth and not hit
        if not (tp and fp == 0 and fn == 0):
            bad.append(f"{f} tp={tp} fp={fp} fn={fn}")
    ok = shape and not bad and validation.rate == 1 and elapsed < 10
    report_line(1, ok, f"{len(corpus)} samples, P=R=1.00 on {10 - len(bad)}/10 features, "
                       f"agreement {validation.rate}, {elapsed:.2f}s {bad}")


def test_criterion_2_fep_kill_fpp_keep(report_line, perturbed):
    fep = fpp = 0
    bad = []
    for s, r in perturbed:
        bad += [v.variant_id for v, _ in r.failed]
        for v in r.variants:
            if v.kind not in (VariantKind.FPP, VariantKind.FEP):
                continue
            after = detect_source(v.source, v.check_lines, v.sample_id)
            same = [w for w in after if w.feature is v.feature]
            if v.kind is VariantKind.FEP:
                fep += 1
                killed = not same if not v.partial else \
                    witness_signature(v.target, v.line_mapping) not in {witness_signature(w) for w in same}
                if not killed:
                    bad.append(v.variant_id)
            else:
                fpp += 1
                anchors = {v.line_mapping.get(n, n) for n in v.target.lines.values()}
                if not any(set(w.lines.values()) & anchors for w in same):
                    bad.append(v.variant_id)
    report_line(2, fep > 0 and fpp > 0 and not bad,
                f"{fep} FEP killed, {fpp} FPP kept, {len(bad)} failures {bad[:5]}")


def test_criterion_3_sf_neutrality(report_line, corpus):
    checked = 0
    bad = []
    for s in corpus:
        before = detect_source(s.source, s.vulnerable_lines, s.sample_id)
        variants = gen_sf_all(s)
        assert {v.kind for v in variants} == set(SF_KINDS)
        for v in variants:
            after = detect_source(v.source, v.vulnerable_lines, s.sample_id)
            want = Counter(witness_signature(w, v.line_mapping, v.symbols) for w in before)
            if want != Counter(witness_signature(w) for w in after):
                bad.append(v.variant_id)
        checked += 1
    report_line(3, not bad, f"{checked}/{len(corpus)} samples x 4 SF kinds neutral, "
                            f"{len(bad)} changed {bad[:5]}")


def _detector_report(corpus, perturbed, kind):
    variants = [v for _, r in perturbed for v in r.variants]
    manifest = [VariantEntry.from_record(v.manifest_record()) for v in variants]
    preds = reference_detector(kind, list(corpus) + variants, use_lines=lines_known(corpus))
    return evaluate_detector(preds, manifest, {s.sample_id: s.label for s in corpus})


def test_criterion_4_constant_vulnerable_pattern(report_line, corpus, perturbed):
    d = _detector_report(corpus, perturbed, "constant_vulnerable")
    bad = []
    for f in VF_ROWS:
        r, cat = d.result(f), d.category(f)
        fpp, fep = render_percent(r.sr_fpp), render_percent(r.sr_fep)
        if r.t_fpp and r.t_fep:
            if (fpp, fep, cat.label) != ("100.00", "0.00", "HL"):
                bad.append(f"{f} {fpp}/{fep} {cat.label}")
        elif f == "RA":
            if (fpp, cat.label) != ("-", "UNCLASSIFIED"):
                bad.append(f"RA {fpp} {cat.label}")
        else:
            bad.append(f"{f} lacks a variant kind")
    report_line(4, not bad, f"HL on {9 - len(bad)}/9 features, RA '-' UNCLASSIFIED {bad}")


def test_criterion_5_oracle_ceiling(report_line, corpus, perturbed):
    d = _detector_report(corpus, perturbed, "oracle")
    rows = VF_ROWS + SF_ROWS
    bad = [f for f in rows if d.result(f).sr != 100]
    delta = (d.accuracy.precision_delta, d.accuracy.recall_delta)
    report_line(5, not bad and delta == (0, 0),
                f"SR=100.00 on {len(rows) - len(bad)}/{len(rows)} rows, accuracy delta "
                f"({render_percent(delta[0])}, {render_percent(delta[1])})")


def test_criterion_6_formula_identities(report_line):
    rng = random.Random(6)
    bad = 0
    for _ in range(1000):
        a, b = rng.randint(1, 50), rng.randint(1, 50)
        r = SatisfactionResult("X", a, b, rng.randint(0, a), rng.randint(0, b))
        bad += r.sr != (a * r.sr_fpp + b * r.sr_fep) / (a + b)
    hand = SatisfactionResult("X", 3, 2, 3, 1)
    ok_hand = (hand.sr, hand.sr_fpp, hand.sr_fep) == (Fraction(80), Fraction(100), Fraction(50))
    report_line(6, bad == 0 and ok_hand,
                f"1000 tuples, {bad} mismatches; hand example {hand.sr}/{hand.sr_fpp}/{hand.sr_fep}")


def test_criterion_7_graph_oracles(report_line, corpus):
    graphs = [g for src in [s.source for s in corpus] + [EXTRA]
              for g in build_all(parse(src)) if O.statement_count(g) <= 12]
    bad = []
    for g in graphs:
        pdom = O.post_dominators(g)
        if {(e.src, e.dst, e.label) for e in g.edges_of(EdgeKind.DD)} != O.reaching_dd(g):
            bad.append(f"DD {g.function}")
        if {e.src: e.dst for e in g.edges_of(EdgeKind.PD)} != O.immediate(pdom):
            bad.append(f"PD {g.function}")
        if {(e.src, e.dst, e.label) for e in g.edges_of(EdgeKind.CD)} != O.control_dependence(g, pdom):
            bad.append(f"CD {g.function}")
    rng = random.Random(20240611)
    misses = 0
    for _ in range(1000):
        text, want = _expr(rng, 4)
        misses += eval_const(parse_expression(text)[0]) != (UNKNOWN if want is None else want)
    product = eval_const(parse_expression("10*sizeof(int)")[0])
    report_line(7, graphs and not bad and misses == 0 and product == 40,
                f"{len(graphs)} functions, {len(bad)} edge mismatches; eval_const "
                f"{1000 - misses}/1000, 10*sizeof(int)={product}")


def _tree(path: Path) -> dict[str, bytes]:
    return {str(p.relative_to(path)): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def _full_pipeline(root: Path) -> float:
    corpus, work, rep = root / "corpus", root / "work", root / "report"
    t0 = time.perf_counter()
    steps = [["gen-corpus", "--out", corpus, "--n", 1000, "--seed", 0],
             ["detect", "--corpus", corpus, "--out", work],
             ["perturb", "--corpus", corpus, "--out", work],
             ["predict", "--corpus", corpus, "--out", work, "--detector", "oracle",
              "--predictions", work / "oracle.jsonl"],
             ["evaluate", "--corpus", corpus, "--out", rep, "--variants", work,
              "--predictions", work / "oracle.jsonl"],
             ["report", "--out", rep]]
    for step in steps:
        code = main([str(a) for a in step])
        if code != 0:
            raise AssertionError(f"{step[0]} exited {code}")
    return time.perf_counter() - t0


def test_criterion_8_scale(report_line, tmp_path, capsys):
    first = _full_pipeline(tmp_path / "a")
    second = _full_pipeline(tmp_path / "b")
    capsys.readouterr()
    a, b = _tree(tmp_path / "a"), _tree(tmp_path / "b")
    same = a == b
    report_line(8, max(first, second) < 60 and same,
                f"1000 samples, runs {first:.1f}s and {second:.1f}s, {len(a)} files "
                f"{'byte-identical' if same else 'DIFFER'}")
