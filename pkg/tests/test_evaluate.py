import random
from fractions import Fraction

import pytest

from viperkit.evaluate import (SF_ROWS, VF_ROWS, CorpusSummary, EvaluationReport,
                               MissingPrediction, PredictionRecord, SatisfactionResult,
                               VariantEntry, accuracy_delta, classify, dump_predictions,
                               dump_report, evaluate_detector, fpp_mean, load_predictions,
                               parse_report, reference_detector, render_percent, render_table,
                               satisfaction)
from viperkit.frontend.sample import Label

V, N = Label.VULNERABLE, Label.NON_VULNERABLE


def pred(i, label, det="d"):
    return PredictionRecord(i, label, det)


# -- satisfaction ---------------------------------------------------------------------

def test_hand_example():
    r = SatisfactionResult("IBS", t_fpp=3, t_fep=2, kept_fpp=3, flipped_fep=1)
    assert (r.sr, r.sr_fpp, r.sr_fep) == (80, 100, 50)


def test_rate_identity_on_random_counts():
    rng = random.Random(3)
    for _ in range(1000):
        a, b = rng.randint(0, 30), rng.randint(0, 30)
        ka, kb = rng.randint(0, a), rng.randint(0, b)
        r = SatisfactionResult("X", a, b, ka, kb)
        if a + b == 0:
            assert r.sr is None
            continue
        parts = (r.sr_fpp or 0) * a + (r.sr_fep or 0) * b
        assert r.sr * (a + b) == parts
        assert 0 <= r.sr <= 100


def test_inconsistent_counts_rejected():
    with pytest.raises(ValueError):
        SatisfactionResult("X", 1, 0, 2, 0)


def test_undefined_rates_render_as_dash():
    r = SatisfactionResult("RA", 0, 4, 0, 4)
    assert r.sr_fpp is None and render_percent(r.sr_fpp) == "-"
    assert render_percent(r.sr_fep) == "100.00"


@pytest.mark.parametrize("num,den,text", [(2, 3, "66.67"), (1, 8, "12.50"), (1, 3, "33.33"),
                                          (91, 99, "91.92"), (1, 200, "0.50"), (1, 400, "0.25")])
def test_render_rounds_half_up(num, den, text):
    assert render_percent(Fraction(100 * num, den)) == text


def _manifest():
    return [VariantEntry("s1__F", "s1", "FPP", "IBS", V),
            VariantEntry("s1__E", "s1", "FEP", "IBS", N),
            VariantEntry("s2__E", "s2", "FEP", "IBS", V, partial=True),
            VariantEntry("s1__S", "s1", "SF_IDENTIFIER", None, V),
            VariantEntry("s1__Z", "s1", "SF_FORMATTING", None, V, noop=True)]


def test_satisfaction_counts_and_skips_partial():
    orig = [pred("s1", V), pred("s2", V)]
    var = [pred("s1__F", V), pred("s1__E", N), pred("s2__E", N), pred("s1__S", N)]
    r = satisfaction("IBS", orig, var, _manifest())
    assert (r.t_fpp, r.t_fep, r.kept_fpp, r.flipped_fep, r.excluded_partial) == (1, 1, 1, 1, 1)
    r = satisfaction("IBS", orig, var, _manifest(), include_partial=True)
    assert (r.t_fep, r.flipped_fep) == (2, 2)
    sf = satisfaction("SF_IDENTIFIER", orig, var, _manifest())
    assert (sf.t_fpp, sf.kept_fpp) == (1, 0)
    assert satisfaction("SF_FORMATTING", orig, var, _manifest()).t_fpp == 0


def test_missing_prediction_lists_ids():
    with pytest.raises(MissingPrediction) as exc:
        satisfaction("IBS", [pred("s1", V)], [pred("s1__F", V)], _manifest())
    assert exc.value.ids == ["s1__E"]


# -- classification -------------------------------------------------------------------

def _rates(fpp, fep):
    """A result whose rates equal the given fractions of 100."""
    return SatisfactionResult("X", 10000, 10000, int(fpp * 100), int(fep * 100))


def test_classify_constant_vulnerable_is_hl():
    c = classify(_rates(100, 0), Fraction(9930, 100))
    assert c.label == "HL"


def test_classify_hh():
    assert classify(_rates(100, Fraction(9167, 100)), Fraction(9388, 100)).label == "HH"


def test_classify_lh():
    assert classify(_rates(Fraction(6429, 100), Fraction(9167, 100)), Fraction(7683, 100)).label == "LH"


def test_classify_undefined_is_unclassified():
    r = SatisfactionResult("RA", 0, 4, 0, 4)
    assert classify(r, Fraction(90)).label == "UNCLASSIFIED"
    assert classify(_rates(50, 50), None).label == "UNCLASSIFIED"


def test_classify_boundaries():
    assert classify(_rates(87, 51), 90).label == "HH"
    assert classify(_rates(Fraction(8699, 100), Fraction(5099, 100)), 90).label == "LL"


def test_classify_is_monotone():
    rng = random.Random(8)
    order = {"L": 0, "H": 1}
    for _ in range(300):
        f1, e1 = rng.randint(0, 100), rng.randint(0, 100)
        f2, e2 = rng.randint(f1, 100), rng.randint(e1, 100)
        mean = rng.randint(0, 100)
        a, b = classify(_rates(f1, e1), mean).label, classify(_rates(f2, e2), mean).label
        assert order[a[0]] <= order[b[0]] and order[a[1]] <= order[b[1]]


def test_fpp_mean_ignores_undefined():
    rs = [SatisfactionResult("A", 2, 0, 2, 0), SatisfactionResult("B", 2, 0, 1, 0),
          SatisfactionResult("C", 0, 2, 0, 1)]
    assert fpp_mean(rs) == 75
    assert fpp_mean([rs[2]]) is None


# -- accuracy -------------------------------------------------------------------------

def test_accuracy_delta_precision_drop():
    truths = {"a": V, "b": N, "a2": V, "b2": N}
    p, r = accuracy_delta([pred("a", V), pred("b", N)], [pred("a2", V), pred("b2", V)], truths)
    assert (p, r) == (Fraction(-1, 2), 0)


def test_accuracy_delta_identical_sets():
    truths = {"a": V, "b": N}
    preds = [pred("a", V), pred("b", V)]
    assert accuracy_delta(preds, preds, truths) == (0, 0)


def test_constant_vulnerable_on_half_fep_variants():
    truths = {f"o{k}": V for k in range(10)}
    truths.update({f"v{k}": (N if k < 5 else V) for k in range(10)})
    orig = [pred(f"o{k}", V) for k in range(10)]
    var = [pred(f"v{k}", V) for k in range(10)]
    p, r = accuracy_delta(orig, var, truths)
    assert (1 + p, 1 + r) == (Fraction(1, 2), 1)


# -- reference detectors and prediction files -------------------------------------------

def test_random_detector_is_deterministic(corpus):
    a = reference_detector("random(7)", corpus)
    b = reference_detector("random", corpus, seed=7)
    assert a == b and a[0].detector_id == "random(7)"
    assert reference_detector("random(7)", corpus, seed=0) == a
    assert reference_detector("random(8)", corpus) != a
    subset = reference_detector("random(7)", corpus[5:])
    assert subset == a[5:]


def test_oracle_matches_ground_truth(corpus):
    for s, r in zip(corpus, reference_detector("oracle", corpus)):
        assert r.predicted_label is s.label


def test_predictions_round_trip():
    recs = [pred("a", V, "x"), pred("b", N, "x"), pred("a", N, "y")]
    assert load_predictions(dump_predictions(recs)) == recs


def test_duplicate_predictions_rejected():
    with pytest.raises(ValueError):
        load_predictions(dump_predictions([pred("a", V), pred("a", N)]))


# -- reports ----------------------------------------------------------------------------

def _report(corpus, perturbed, kind):
    from viperkit.pipeline import lines_known
    manifest = [VariantEntry.from_record(v.manifest_record()) for _, r in perturbed for v in r.variants]
    variants = [v for _, r in perturbed for v in r.variants]
    preds = reference_detector(kind, list(corpus) + variants, use_lines=lines_known(corpus))
    truths = {s.sample_id: s.label for s in corpus}
    return evaluate_detector(preds, manifest, truths)


def test_oracle_scores_full_marks(corpus, perturbed):
    d = _report(corpus, perturbed, "oracle")
    for f in VF_ROWS:
        r = d.result(f)
        assert r.sr_fep == 100 and r.sr_fpp in (100, None)
    for f in SF_ROWS:
        assert d.result(f).sr_fpp == 100
    assert d.accuracy.precision_delta == 0 and d.accuracy.recall_delta == 0


def test_constant_vulnerable_is_hl_everywhere(corpus, perturbed):
    d = _report(corpus, perturbed, "constant_vulnerable")
    for f in VF_ROWS:
        assert d.result(f).sr_fep == 0
        assert d.category(f).label == ("UNCLASSIFIED" if f == "RA" else "HL")


def test_report_round_trip_and_table(corpus, perturbed):
    dets = tuple(_report(corpus, perturbed, k) for k in ("oracle", "constant_vulnerable"))
    rep = EvaluationReport(dets, CorpusSummary(samples=len(corpus)))
    text = dump_report(rep)
    assert parse_report(text) == rep and dump_report(parse_report(text)) == text
    table = render_table(rep)
    rows = [ln for ln in table.splitlines() if ln.split() and ln.split()[0] in VF_ROWS + SF_ROWS]
    assert len(rows) == 14
    ra = next(ln for ln in rows if ln.startswith("RA "))
    assert ra.split()[1] == "-"


def test_report_schema_version_checked():
    with pytest.raises(ValueError):
        parse_report('{"schema_version": 99, "detectors": [], "corpus": {}}')


def test_evaluate_detector_reports_every_missing_id(corpus, perturbed):
    manifest = [VariantEntry.from_record(v.manifest_record()) for _, r in perturbed for v in r.variants]
    variants = [v for _, r in perturbed for v in r.variants]
    preds = reference_detector("oracle", list(corpus) + variants)
    truths = {s.sample_id: s.label for s in corpus}
    dropped = {p.id for p in preds[-3:]}
    with pytest.raises(MissingPrediction) as exc:
        evaluate_detector(preds[:-3], manifest, truths)
    assert set(exc.value.ids) == dropped
