from collections import Counter

import pytest

from viperkit.detect import FeatureId, detect_source
from viperkit.frontend.parser import parse
from viperkit.frontend.sample import CodeSample, Label
from viperkit.perturb import (SF_KINDS, VariantKind, build_symbol_map, check_variant, fep_label,
                              gen_sf_formatting, gen_sf_identifier, perturb_sample,
                              witness_signature)


def sample(body, lines, params="void", sid="x"):
    src = f"void f({params})\n{{\n" + "".join(f"    {b}\n" for b in body) + "}\n"
    return CodeSample(sid, f"{sid}.c", Label.VULNERABLE if lines else Label.NON_VULNERABLE, src,
                      vulnerable_lines=frozenset(lines))


def constants(v):
    return [dict(w.constants) for w in detect_source(v.source, v.check_lines)]


IBS = sample(["char d[10];", "memset(d, 'C', 10*sizeof(int));"], {4})


def test_ibs_variants_hit_the_four_targets():
    r = perturb_sample(IBS)
    vf = {v.variant_id: v for v in r.variants if not v.kind.is_sf}
    assert constants(vf["x__IBS__FPP__1"]) == [{"LEN_d": 9, "n": 40}]
    assert constants(vf["x__IBS__FPP__2"]) == [{"LEN_d": 10, "n": 41}]
    assert "char d[40];" in vf["x__IBS__FEP__1"].source
    assert "memset(d, 'C', 10);" in vf["x__IBS__FEP__2"].source
    for k in (1, 2):
        fep = vf[f"x__IBS__FEP__{k}"]
        assert detect_source(fep.source) == []
        assert fep.expected_label is Label.NON_VULNERABLE and not fep.vulnerable_lines
    assert len(vf) == 4 and not r.failed


def test_fpp_variants_keep_label_and_lines():
    for v in perturb_sample(IBS).variants:
        if v.kind is VariantKind.FPP:
            assert v.expected_label is Label.VULNERABLE and v.vulnerable_lines == {4}


def test_read_api_has_no_fpp():
    s = sample(["char buf[64];", "fgets(buf, 64, stdin);"], {4})
    kinds = Counter(v.kind for v in perturb_sample(s).variants if v.feature is FeatureId.RA)
    assert kinds[VariantKind.FPP] == 0 and kinds[VariantKind.FEP] >= 1


@pytest.mark.parametrize("feature", [f for f in FeatureId if f is not FeatureId.RA])
def test_every_feature_gets_fpp_and_fep(perturbed, feature):
    kinds = Counter(v.kind for _, r in perturbed for v in r.variants if v.feature is feature)
    assert kinds[VariantKind.FPP] >= 1 and kinds[VariantKind.FEP] >= 1


def test_corpus_variants_pass_their_self_check(perturbed):
    for s, r in perturbed:
        assert not r.failed, [(v.variant_id, why) for v, why in r.failed]
        for v in r.variants:
            assert check_variant(v, r.witnesses).ok


def test_fep_removes_exactly_the_target(perturbed):
    for _, r in perturbed:
        for v in r.variants:
            if v.kind is not VariantKind.FEP:
                continue
            after = {witness_signature(w) for w in detect_source(v.source, v.check_lines)}
            assert witness_signature(v.target, v.line_mapping) not in after


def test_sf_variants_preserve_the_witness_multiset(perturbed):
    seen = Counter()
    for _, r in perturbed:
        for v in r.variants:
            if not v.kind.is_sf:
                continue
            seen[v.kind] += 1
            before = Counter(witness_signature(w, v.line_mapping, v.symbols) for w in r.witnesses)
            after = Counter(witness_signature(w) for w in detect_source(v.source, v.check_lines
                                                                        if v.check_lines is not None
                                                                        else v.vulnerable_lines))
            assert before == after, v.variant_id
            assert v.expected_label is not None
    assert set(seen) == set(SF_KINDS)


def test_sf_labels_follow_the_parent(perturbed):
    for s, r in perturbed:
        for v in r.variants:
            if v.kind.is_sf:
                assert v.expected_label is s.label


def test_symbol_map_is_injective_and_keeps_library_names():
    s = sample(["char *p;", "p = malloc(8);", "free(p);", "helper(p);"], set())
    m = build_symbol_map(parse(s.source))
    assert len(set(m.mapping.values())) == len(m.mapping)
    assert m["p"].startswith("VAR") and m["f"].startswith("FUN") and m["helper"].startswith("FUN")
    assert m.get("malloc") is None and m.get("free") is None and m.get("char") is None
    v, _ = gen_sf_identifier(s)
    assert "malloc(8)" in v.source and "p" not in {t for t in v.source.replace("(", " ").split()}


def test_symbol_map_skips_existing_symbolic_names():
    s = sample(["int VAR1;", "int x;", "x = VAR1;"], set())
    m = build_symbol_map(parse(s.source))
    assert m["VAR1"] == "VAR1" and m["x"] == "VAR2"


def test_formatting_variant_is_idempotent():
    v = gen_sf_formatting(IBS)
    again = gen_sf_formatting(CodeSample("y", "y.c", Label.VULNERABLE, v.source))
    assert again.source == v.source and again.noop


def test_label_algebra_for_fep():
    assert fep_label(Label.VULNERABLE, 1) == (Label.NON_VULNERABLE, False)
    assert fep_label(Label.VULNERABLE, 2) == (Label.VULNERABLE, True)


def test_partial_fep_keeps_vulnerable_label():
    s = sample(["char *p;", "p = malloc(8);", "free(p);", "memcpy(p, s, n);"], {6},
               "char *s, int n")
    feps = [v for v in perturb_sample(s).variants if v.kind is VariantKind.FEP]
    assert feps
    for v in feps:
        assert v.partial and v.expected_label is Label.VULNERABLE and v.vulnerable_lines


def test_feature_filter_limits_vf_variants():
    s = sample(["char *p;", "p = malloc(8);", "free(p);", "memcpy(p, s, n);"], {6},
               "char *s, int n")
    r = perturb_sample(s, features={FeatureId.UAF}, sf=False)
    assert r.variants and {v.feature for v in r.variants} == {FeatureId.UAF}


def test_unparseable_sample_reports_an_error():
    s = CodeSample("g", "g.c", Label.VULNERABLE, "void f(void) { goto x; }")
    r = perturb_sample(s)
    assert r.error and not r.variants


def test_variant_ids_are_unique(variants):
    ids = [v.variant_id for v in variants]
    assert len(ids) == len(set(ids))


def test_perturbation_is_deterministic(corpus):
    a = perturb_sample(corpus[3])
    b = perturb_sample(corpus[3])
    assert [(v.variant_id, v.source) for v in a.variants] == \
           [(v.variant_id, v.source) for v in b.variants]
