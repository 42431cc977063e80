import json
from pathlib import Path

import pytest

from viperkit.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """gen-corpus + perturb once; tests predict and evaluate on top."""
    root = tmp_path_factory.mktemp("cli")
    corpus, work = root / "corpus", root / "work"
    assert main(["gen-corpus", "--out", str(corpus), "--n", "40", "--seed", "0"]) == 0
    assert main(["perturb", "--corpus", str(corpus), "--out", str(work)]) == 0
    return corpus, work


def tree(path: Path) -> dict[str, bytes]:
    return {str(p.relative_to(path)): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def test_gen_corpus_is_deterministic(tmp_path, capsys):
    run(capsys, "gen-corpus", "--out", tmp_path / "a", "--seed", 4)
    code, out, _ = run(capsys, "gen-corpus", "--out", tmp_path / "b", "--seed", 4)
    assert code == 0 and out.startswith("40 samples")
    assert tree(tmp_path / "a") == tree(tmp_path / "b")
    assert len(list((tmp_path / "a").glob("*.c"))) >= 40


def test_detect_summary(pipeline, tmp_path, capsys):
    corpus, _ = pipeline
    code, out, _ = run(capsys, "detect", "--corpus", corpus, "--out", tmp_path)
    assert code == 0
    assert "IBS: 2" in out.splitlines()
    rows = (tmp_path / "annotations.jsonl").read_text().splitlines()
    assert len(rows) == 20 and all(json.loads(r)["schema_version"] for r in rows)


def test_detect_empty_corpus(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    code, out, _ = run(capsys, "detect", "--corpus", tmp_path / "empty", "--out", tmp_path / "o")
    assert code == 0 and "samples: 0" in out


def test_detect_skips_unparseable_sample(tmp_path, capsys):
    src = tmp_path / "src"
    src.mkdir()
    (src / "a.c").write_text("void f(void)\n{\n    char d[4];\n    memset(d, 0, 8);\n}\n")
    (src / "b.c").write_text("void g(void)\n{\nx:\n    goto x;\n}\n")
    code, out, _ = run(capsys, "detect", "--corpus", src, "--out", tmp_path / "o")
    assert code == 0 and "skipped: 1" in out
    summary = json.loads((tmp_path / "o" / "detect_summary.json").read_text())
    assert [s["sample_id"] for s in summary["skipped"]] == ["b"]
    code, _, err = run(capsys, "detect", "--corpus", src, "--out", tmp_path / "o",
                       "--max-skip-rate", "0.25")
    assert code == 1 and "could not be analyzed" in err


def test_validate(pipeline, tmp_path, capsys):
    corpus, _ = pipeline
    code, out, _ = run(capsys, "validate", "--corpus", corpus, "--out", tmp_path)
    assert code == 0 and "= 1.00" in out
    bare = tmp_path / "bare"
    bare.mkdir()
    (bare / "a.c").write_text("void f(void)\n{\n    int x;\n    x = 1;\n}\n")
    code, out, err = run(capsys, "validate", "--corpus", bare)
    assert code == 0 and "UNDEFINED" in out and "warning" in err


def test_perturb_outputs(pipeline):
    _, work = pipeline
    records = [json.loads(x) for x in (work / "variants.jsonl").read_text().splitlines()]
    assert records and all((work / "variants" / r["path"]).is_file() for r in records)
    summary = json.loads((work / "perturb_summary.json").read_text())
    assert summary["failed"] == [] and summary["skipped"] == []


def _evaluate(capsys, corpus, work, out, detector, *extra):
    preds = out / f"{detector}.jsonl"
    assert main(["predict", "--corpus", str(corpus), "--out", str(work), "--detector", detector,
                 "--predictions", str(preds)]) == 0
    capsys.readouterr()
    return run(capsys, "evaluate", "--corpus", corpus, "--out", out, "--variants", work,
               "--predictions", preds, *extra)


def _row(table, feature):
    return next(ln.split() for ln in table.splitlines() if ln.split()[:1] == [feature])


def test_evaluate_oracle(pipeline, tmp_path, capsys):
    corpus, work = pipeline
    code, out, _ = _evaluate(capsys, corpus, work, tmp_path, "oracle")
    assert code == 0
    assert _row(out, "IBS")[1:3] == ["100.00", "100.00"]
    assert (tmp_path / "report.json").is_file() and (tmp_path / "report.txt").is_file()


def test_evaluate_constant_vulnerable(pipeline, tmp_path, capsys):
    corpus, work = pipeline
    code, out, _ = _evaluate(capsys, corpus, work, tmp_path, "constant_vulnerable")
    assert code == 0
    assert _row(out, "IBS")[1:4] == ["100.00", "0.00", "HL"]
    assert _row(out, "RA")[1:4] == ["-", "0.00", "UNCLASSIFIED"]


def test_evaluate_missing_predictions(pipeline, tmp_path, capsys):
    corpus, work = pipeline
    preds = tmp_path / "p.jsonl"
    main(["predict", "--corpus", str(corpus), "--out", str(work), "--predictions", str(preds)])
    lines = preds.read_text().splitlines()
    preds.write_text("\n".join(lines[:-3]) + "\n")
    code, _, err = run(capsys, "evaluate", "--corpus", corpus, "--out", tmp_path / "r",
                       "--variants", work, "--predictions", preds)
    assert code != 0
    listed = [ln.strip() for ln in err.splitlines()[1:]]
    assert sorted(listed) == sorted(json.loads(x)["id"] for x in lines[-3:])


def test_config_file_and_flag_precedence(pipeline, tmp_path, capsys, monkeypatch):
    corpus, work = pipeline
    cfg = tmp_path / "k.cfg"
    cfg.write_text("# thresholds\nfep_floor = 20\nepsilon=1\n")
    code, out, _ = _evaluate(capsys, corpus, work, tmp_path, "oracle", "--config", cfg)
    assert code == 0 and "FEP floor 20.00" in out and "- 1.00" in out
    code, out, _ = _evaluate(capsys, corpus, work, tmp_path, "oracle", "--config", cfg,
                             "--fep-floor", "60")
    assert "FEP floor 60.00" in out
    monkeypatch.setenv("VIPERKIT_CONFIG", str(cfg))
    code, out, _ = _evaluate(capsys, corpus, work, tmp_path, "oracle")
    assert "FEP floor 20.00" in out


def test_config_sizeof_override(tmp_path, capsys):
    src = tmp_path / "src"
    src.mkdir()
    (src / "a.c").write_text("void f(void)\n{\n    char d[10];\n    memset(d, 0, 5*sizeof(int));\n}\n")
    code, out, _ = run(capsys, "detect", "--corpus", src, "--out", tmp_path / "o")
    assert "IBS: 1" in out
    cfg = tmp_path / "k.cfg"
    cfg.write_text("sizeof.int=2\n")
    code, out, _ = run(capsys, "detect", "--corpus", src, "--out", tmp_path / "o", "--config", cfg)
    assert "IBS: 0" in out


def test_bad_threshold_is_usage_error(pipeline, tmp_path, capsys):
    corpus, work = pipeline
    code, _, err = run(capsys, "evaluate", "--corpus", corpus, "--out", tmp_path, "--variants",
                       work, "--predictions", tmp_path / "x.jsonl", "--fep-floor", "140")
    assert code == 2 and "outside" in err


def test_report_merges_detectors(pipeline, tmp_path, capsys):
    corpus, work = pipeline
    _evaluate(capsys, corpus, work, tmp_path / "a", "oracle")
    _evaluate(capsys, corpus, work, tmp_path / "b", "constant_benign")
    code, out, _ = run(capsys, "report", "--report", tmp_path / "a" / "report.json",
                       "--report", tmp_path / "b" / "report.json")
    assert code == 0 and "oracle FPP" in out and "constant_benign FPP" in out


def test_worker_count_does_not_change_output(pipeline, tmp_path, capsys):
    corpus, _ = pipeline
    for w in (1, 2):
        out = tmp_path / f"w{w}"
        assert main(["detect", "--corpus", str(corpus), "--out", str(out), "--workers", str(w)]) == 0
        assert main(["perturb", "--corpus", str(corpus), "--out", str(out), "--workers", str(w)]) == 0
        assert main(["predict", "--corpus", str(corpus), "--out", str(out), "--workers", str(w),
                     "--predictions", str(out / "p.jsonl")]) == 0
        assert main(["evaluate", "--corpus", str(corpus), "--out", str(out / "r"), "--variants",
                     str(out), "--predictions", str(out / "p.jsonl"), "--workers", str(w)]) == 0
    capsys.readouterr()
    assert tree(tmp_path / "w1") == tree(tmp_path / "w2")


def test_predict_random_seed_sources(pipeline, tmp_path, capsys):
    corpus, work = pipeline
    code, out, _ = run(capsys, "predict", "--corpus", corpus, "--out", work,
                       "--detector", "random(7)", "--predictions", tmp_path / "a.jsonl")
    assert code == 0 and "from random(7)" in out
    code, out, _ = run(capsys, "predict", "--corpus", corpus, "--out", work,
                       "--detector", "random", "--seed", 3, "--predictions", tmp_path / "b.jsonl")
    assert "from random(3)" in out
