import itertools
import random
from collections import Counter

import pytest

from viperkit.detect import (AnalysisError, FeatureId, FeatureWitness, analyze_source,
                             annotate_sample, detect_source, dump_witnesses, load_witnesses,
                             validate_against_sard)
from viperkit.detect.features import predicate_holds
from viperkit.frontend.sample import CodeSample, Label


def fn(body, params="void"):
    return f"void f({params})\n{{\n" + "".join(f"    {line}\n" for line in body) + "}\n"


def feats(src, lines=None):
    return sorted(w.feature.value for w in detect_source(src, lines))


def consts_of(src, feature):
    return [dict(w.constants) for w in detect_source(src) if w.feature is feature]


# -- overflow ------------------------------------------------------------------------

def test_ibs_memset_of_ints_into_chars():
    src = fn(["char d[10];", "memset(d, 'C', 10*sizeof(int));"])
    assert consts_of(src, FeatureId.IBS) == [{"LEN_d": 10, "n": 40}]


def test_bsb_wins_over_ibs():
    src = fn(["char d[10];", "char s[40];", "memcpy(d, s, 40);"])
    assert feats(src) == ["BSB"]
    assert consts_of(src, FeatureId.BSB) == [{"LEN_d": 10, "LEN_s": 40, "n": 40}]


def test_exact_fit_is_clean():
    assert feats(fn(["char d[10];", "char s[10];", "memcpy(d, s, 10);"])) == []


def test_oe_strncpy():
    src = fn(["char b[7];", "char s[20];", "strncpy(b, s, 8);"])
    assert feats(src) == ["OE"]
    assert consts_of(src, FeatureId.OE) == [{"LEN_d": 7, "n": 8}]


def test_bo_independent_of_dest():
    src = fn(["char d[50];", "char s[10];", "memcpy(d, s, 20);"])
    assert feats(src) == ["BO"]


def test_alias_chain_resolves_buffer():
    src = fn(["char buf[10];", "char *p;", "p = buf;", "memset(p, 0, 40);"])
    assert feats(src) == ["IBS"]


def test_malloc_buffer_with_cast():
    src = fn(["int *d;", "d = (int *)malloc(10);", "memset(d, 0, 10*sizeof(int));", "free(d);"])
    assert consts_of(src, FeatureId.IBS) == [{"LEN_d": 10, "n": 40}]


def _expected_overflow(ld, ls, n):
    """Independent reading of the four overflow predicates plus precedence."""
    out = set()
    if n == ld + 1:
        out.add("OE")
    elif ld < n and n == ls:
        out.add("BSB")
    elif ld < n:
        out.add("IBS")
    if ls < n:
        out.add("BO")
    return sorted(out)


def test_overflow_rules_match_predicates_exhaustively():
    for ld, ls, n in itertools.product(range(1, 7), range(1, 7), range(0, 9)):
        src = fn([f"char d[{ld}];", f"char s[{ls}];", f"memcpy(d, s, {n});"])
        assert feats(src) == _expected_overflow(ld, ls, n), (ld, ls, n)


def test_write_without_source_only_uses_dest_rules():
    for ld, n in itertools.product(range(1, 8), range(0, 10)):
        got = feats(fn([f"char d[{ld}];", f"memset(d, 0, {n});"]))
        want = ["OE"] if n == ld + 1 else (["IBS"] if ld < n else [])
        assert got == want, (ld, n)


def test_unknown_constants_abstain():
    src_known = fn(["char d[10];", "memset(d, 0, 40);"])
    src_unknown = fn(["char d[10];", "memset(d, 0, n);"], "int n")
    assert feats(src_known) == ["IBS"]
    assert feats(src_unknown) == []


def test_monotone_abstention_on_random_triples():
    rng = random.Random(5)
    for _ in range(200):
        ld, ls, n = rng.randint(1, 20), rng.randint(1, 20), rng.randint(0, 25)
        known = set(feats(fn([f"char d[{ld}];", f"char s[{ls}];", f"memcpy(d, s, {n});"])))
        unknown = set(feats(fn([f"char d[{ld}];", f"char s[{ls}];", "memcpy(d, s, k);"], "int k")))
        assert unknown <= known


# -- deallocation ----------------------------------------------------------------------

def test_double_free():
    src = fn(["char *p;", "p = malloc(8);", "free(p);", "free(p);"])
    ws = detect_source(src)
    assert [w.feature for w in ws] == [FeatureId.DF]
    assert dict(ws[0].lines) == {"first_free_line": 5, "second_free_line": 6}


def test_realloc_between_frees_clears_df():
    src = fn(["char *p;", "p = malloc(8);", "free(p);", "p = malloc(8);", "free(p);"])
    assert feats(src) == []


def test_use_after_free():
    src = fn(["char *p;", "char x;", "p = malloc(8);", "free(p);", "x = p[0];"])
    ws = detect_source(src)
    assert [w.feature for w in ws] == [FeatureId.UAF]
    assert dict(ws[0].lines) == {"dealloc_line": 6, "use_line": 7}


def _random_program(rng):
    """Small branchy programs over one pointer; no loops so paths are finite."""
    stmts = ["p = malloc(8);", "free(p);", "x = p[0];", 'printf("-");']
    body = ["char *p;", "char x;", "p = malloc(8);"]
    for _ in range(rng.randint(2, 6)):
        if rng.random() < 0.3:
            then = rng.choice(stmts)
            other = rng.choice(stmts)
            body += ["if (c)", "{", f"    {then}", "}", "else", "{", f"    {other}", "}"]
        else:
            body.append(rng.choice(stmts))
    return fn(body, "int c")


def _brute_dealloc(src):
    from viperkit.cpg import NodeKind, PropertyKey, build_all
    from viperkit.frontend.parser import parse
    g = build_all(parse(src))[0]

    def paths_from(u):
        """All node sequences after u (simple, since the CFG is acyclic here)."""
        out = []
        def walk(n, acc):
            out.append(acc)
            for s in g.successors(n):
                walk(s, acc + [s])
        for s in g.successors(u):
            walk(s, [s])
        return out

    frees = [n for n in g.flow if g.kind(n) is NodeKind.FREE]
    df, uaf = set(), set()
    line = lambda n: g.get(n, PropertyKey.LINE)
    for u in frees:
        for path in paths_from(u):
            *inner, v = path
            if any("p" in g.defs.get(m, ()) for m in inner):
                continue
            if v in frees:
                df.add((line(u), line(v)))
            elif "p" in g.uses.get(v, ()):
                uaf.add(line(u))
    return df, uaf


def test_dealloc_rules_match_path_enumeration():
    rng = random.Random(11)
    for _ in range(150):
        src = _random_program(rng)
        ws = detect_source(src)
        df = {(w.lines["first_free_line"], w.lines["second_free_line"])
              for w in ws if w.feature is FeatureId.DF}
        uaf = {w.lines["dealloc_line"] for w in ws if w.feature is FeatureId.UAF}
        assert (df, uaf) == _brute_dealloc(src), src


# -- range checks ------------------------------------------------------------------------

def test_buw_upper_bound_only():
    src = fn(["int b[10];", "if (i < 10)", "{", "    b[i] = 1;", "}"], "int i")
    assert feats(src) == ["BUW"]


@pytest.mark.parametrize("cond", ["i >= 0 && i < 10", "i < 10 && i > -1", "0 <= i", "-1 < i",
                                  "i >= 3", "i > 0"])
def test_lower_guards_suppress(cond):
    src = fn(["int b[10];", f"if ({cond})", "{", "    b[i] = 1;", "}"], "int i")
    assert feats(src) == []


@pytest.mark.parametrize("cond", ["i > -2", "i >= -1", "i != 0", "i < 10 || i >= 0"])
def test_weak_guards_do_not_suppress(cond):
    src = fn(["int b[10];", f"if ({cond})", "{", "    b[i] = 1;", "}"], "int i")
    assert feats(src) == ["BUW"]


def test_guard_on_else_branch_does_not_count():
    src = fn(["int b[10];", "if (i < 0)", "{", "    i = 0;", "}", "else", "{", "    b[i] = 1;",
              "}"], "int i")
    assert feats(src) == ["BUW"]


def test_bur_guarded_by_greater_than_minus_one():
    src = fn(["int b[10];", "int x;", "if (i > -1)", "{", "    x = b[i];", "}"], "int i")
    assert feats(src) == []
    src = fn(["int b[10];", "int x;", "x = b[i];"], "int i")
    assert feats(src) == ["BUR"]


def test_constant_index_not_checked():
    assert feats(fn(["int b[10];", "b[3] = 1;"])) == []


# -- sensitive API ----------------------------------------------------------------------

def test_read_api_on_vulnerable_line():
    src = fn(["char buf[64];", "fgets(buf, 64, stdin);"])
    assert feats(src, {4}) == ["RA"]
    assert feats(src, {3}) == []
    assert feats(src, None) == []


def test_write_api_with_unknown_count():
    src = fn(["char d[10];", "memcpy(d, s, n);"], "char *s, int n")
    assert feats(src, {4}) == ["WA"]


def test_write_api_suppressed_by_overflow():
    src = fn(["char d[10];", "memset(d, 0, 40);"])
    assert feats(src, {4}) == ["IBS"]


# -- witness records ----------------------------------------------------------------------

def test_corpus_witnesses_satisfy_schema(corpus):
    for s in corpus:
        for w in detect_source(s.source, s.vulnerable_lines, s.sample_id):
            assert w.schema_ok()
            if w.constants:
                assert predicate_holds(w.feature, w.constants)


def test_witness_jsonl_round_trip(corpus):
    ws = [w for s in corpus for w in detect_source(s.source, s.vulnerable_lines, s.sample_id)]
    back = load_witnesses(dump_witnesses(ws))
    assert [w.key() for w in back] == [w.key() for w in ws]


def test_annotate_sample_excludes_clean_samples(corpus):
    fixed = next(s for s in corpus if s.label is Label.NON_VULNERABLE)
    assert annotate_sample(fixed, []) is None


def test_two_witnesses_on_one_sample():
    src = fn(["char *p;", "p = malloc(8);", "free(p);", "memcpy(p, s, n);"], "char *s, int n")
    a = annotate_sample(CodeSample("x", "x.c", Label.VULNERABLE, src, vulnerable_lines={6}),
                        detect_source(src, {6}, "x"))
    assert sorted(f.value for f in a.features) == ["UAF", "WA"]
    assert len(a.records()) == 2


def test_unparseable_source_raises_analysis_error():
    with pytest.raises(AnalysisError):
        analyze_source("void f(void) { goto x; }", sample_id="bad")


def test_detection_is_deterministic(corpus):
    s = corpus[0]
    a = detect_source(s.source, s.vulnerable_lines, s.sample_id)
    b = detect_source(s.source, s.vulnerable_lines, s.sample_id)
    assert a == b


# -- validation --------------------------------------------------------------------------

def _annotated(source, lines=(), sid="s"):
    s = CodeSample(sid, f"{sid}.c", Label.VULNERABLE if lines else Label.NON_VULNERABLE, source,
                   vulnerable_lines=frozenset(lines))
    return annotate_sample(s, detect_source(source, s.vulnerable_lines, sid)) or s


LISTING = fn(["char d[10];", "/* FLAW: 40 bytes into 10 */", "memset(d, 'C', 10*sizeof(int));"])


def test_validation_agrees_on_flaw_line():
    report = validate_against_sard([_annotated(LISTING)])
    assert report.rate == 1


def test_validation_flags_distant_flaw():
    far = LISTING.replace("    /* FLAW: 40 bytes into 10 */\n", "") + "/* FLAW: elsewhere */\nint z;\n"
    report = validate_against_sard([_annotated(far)])
    assert report.rate == 0 and len(report.disagreements) == 1


def test_validation_rate_nine_of_ten():
    items = [_annotated(LISTING, sid=f"s{k}") for k in range(9)]
    bad = LISTING.replace("10*sizeof(int)", "10")        # fixed code, FLAW comment left in
    items.append(_annotated(bad, sid="s9"))
    report = validate_against_sard(items)
    assert report.rate == pytest.approx(0.9)
    assert [d.sample_id for d in report.disagreements] == ["s9"]


def test_validation_without_annotations_is_undefined():
    report = validate_against_sard([_annotated(fn(["int x;"]))])
    assert report.rate is None and report.skipped == ("s",)


def test_generated_corpus_has_one_witness_per_flawed_sample(corpus):
    for s in corpus:
        ws = detect_source(s.source, s.vulnerable_lines, s.sample_id)
        if s.label is Label.VULNERABLE:
            assert [w.feature.value for w in ws] == [s.feature]
        else:
            assert ws == []
