"""Corpus manifests, directory ingestion and the synthetic SARD-style generator.

A manifest is JSONL, one sample per line::

    {"sample_id": "IBS_00000", "path": "CWE131_...c", "label": "vulnerable",
     "cwe": "CWE131", "vulnerable_lines": [14], "feature": "IBS"}

``path`` is relative to the manifest's directory. ``feature`` is optional
and only present for generated samples.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

from .detect.features import FeatureId
from .frontend.annotations import AnnotationKind, extract_annotations
from .frontend.sample import CodeSample, Label

MANIFEST_NAME = "manifest.jsonl"
SOURCE_SUFFIXES = (".c", ".cpp")


# -- manifest I/O --------------------------------------------------------------------

def sample_record(s: CodeSample) -> dict:
    r = {"sample_id": s.sample_id, "path": s.path, "label": s.label.value, "cwe": s.cwe,
         "vulnerable_lines": sorted(s.vulnerable_lines)}
    if s.feature is not None:
        r["feature"] = s.feature
    return r


def dump_manifest(samples: Iterable[CodeSample]) -> str:
    return "".join(json.dumps(sample_record(s), sort_keys=True) + "\n" for s in samples)


def read_manifest(path: str | Path) -> list[CodeSample]:
    """Load a manifest and the sources it points at."""
    path = Path(path)
    root = path.parent
    out, seen = [], set()
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            r = json.loads(line)
            source = (root / r["path"]).read_text(encoding="utf-8")
            s = CodeSample(r["sample_id"], r["path"], Label(r["label"]), source, r.get("cwe"),
                           frozenset(r.get("vulnerable_lines") or ()), r.get("feature"))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"{path}:{n}: {exc}") from exc
        if s.sample_id in seen:
            raise ValueError(f"{path}:{n}: duplicate sample_id {s.sample_id}")
        seen.add(s.sample_id)
        out.append(s)
    return out


def write_corpus(out_dir: str | Path, samples: Iterable[CodeSample]) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    samples = list(samples)
    for s in samples:
        (out / s.path).write_text(s.source, encoding="utf-8")
    manifest = out / MANIFEST_NAME
    manifest.write_text(dump_manifest(samples), encoding="utf-8")
    return manifest


def ingest_directory(root: str | Path) -> list[CodeSample]:
    """Samples from a bare directory of sources.

    Labels come from SARD comments: any FLAW or POTENTIAL FLAW line makes
    the file vulnerable, and those lines become its vulnerable lines.
    """
    root = Path(root)
    out = []
    for p in sorted(root.rglob("*")):
        if p.suffix not in SOURCE_SUFFIXES or not p.is_file():
            continue
        source = p.read_text(encoding="utf-8", errors="replace")
        rel = p.relative_to(root).as_posix()
        flaws = {a.line for a in extract_annotations(source)
                 if a.kind in (AnnotationKind.FLAW, AnnotationKind.POTENTIAL_FLAW)}
        label = Label.VULNERABLE if flaws else Label.NON_VULNERABLE
        out.append(CodeSample(rel.rsplit(".", 1)[0].replace("/", "__"), rel, label, source, None,
                              frozenset(flaws)))
    return out


def load_corpus(path: str | Path) -> list[CodeSample]:
    """A manifest file, a directory holding one, or a directory of sources."""
    path = Path(path)
    if path.is_file():
        return read_manifest(path)
    if (path / MANIFEST_NAME).is_file():
        return read_manifest(path / MANIFEST_NAME)
    if path.is_dir():
        return ingest_directory(path)
    raise FileNotFoundError(f"no corpus at {path}")


# -- generator -----------------------------------------------------------------------

@dataclass
class _Body:
    """Function body lines as (depth, text); remembers the annotated line."""
    lines: list[tuple[int, str]]
    marked: Optional[int] = None

    def add(self, depth: int, text: str) -> None:
        self.lines.append((depth, text))

    def mark(self, depth: int, note: str, text: str) -> None:
        self.lines.append((depth, f"/* {note} */"))
        self.marked = len(self.lines)
        self.lines.append((depth, text))

    def block(self, depth: int, head: str, inner: list[str]) -> None:
        self.add(depth, head)
        self.add(depth, "{")
        for t in inner:
            self.add(depth + 1, t)
        self.add(depth, "}")


DEST_NAMES = ("data", "dest", "dataBuffer", "buf")
SRC_NAMES = ("source", "src", "inputData")
CHATTER = ('printf("start\\n");', 'printf("working\\n");', 'printf("%d\\n", 0);',
           'puts("ready");')


def _chatter(rng: random.Random, body: _Body, depth: int) -> None:
    for _ in range(rng.randint(0, 2)):
        body.add(depth, rng.choice(CHATTER))


def _null_check(body: _Body, depth: int, name: str) -> None:
    body.block(depth, f"if ({name} == NULL)", ["exit(-1);"])


def _fill_source(body: _Body, d: int, src: str, size: int) -> None:
    body.add(d, f"memset({src}, 'A', {size - 1});")
    body.add(d, f"{src}[{size - 1}] = '\\0';")


def _ibs(rng, body: _Body, d: int, bad: bool) -> str:
    n = rng.randint(4, 40)
    dest = rng.choice(DEST_NAMES)
    if rng.random() < 0.5:
        body.add(d, f"int *{dest};")
        _chatter(rng, body, d)
        fill = f"memset({dest}, 0, {n}*sizeof(int));"
        if bad:
            body.add(d, f"{dest} = (int *)malloc({n});")
            _null_check(body, d, dest)
            body.mark(d, f"FLAW: {n} ints written into {n} bytes", fill)
        else:
            body.mark(d, "FIX: allocate room for the ints",
                      f"{dest} = (int *)malloc({n}*sizeof(int));")
            _null_check(body, d, dest)
            body.add(d, fill)
        body.add(d, f"free({dest});")
        return "int"
    body.add(d, f"char {dest}[{n}];")
    _chatter(rng, body, d)
    count = f"{n}*sizeof(int)" if bad else f"{n}*sizeof(char)"
    note = ("FLAW: the byte count is computed with the wrong element size" if bad
            else "FIX: count bytes with the element size of the buffer")
    body.mark(d, note, f"memset({dest}, 'C', {count});")
    return "char"


def _bsb(rng, body: _Body, d: int, bad: bool) -> str:
    dn = rng.randint(8, 40)
    sn = dn + rng.randint(2, 60)
    dest, src = rng.choice(DEST_NAMES), rng.choice(SRC_NAMES)
    body.add(d, f"char {src}[{sn}];")
    body.add(d, f"char {dest}[{dn}];")
    _fill_source(body, d, src, sn)
    _chatter(rng, body, d)
    if bad:
        body.mark(d, "FLAW: copy length is taken from the source buffer",
                  f"memcpy({dest}, {src}, sizeof({src}));")
    else:
        body.mark(d, "FIX: copy length is bounded by the destination",
                  f"memcpy({dest}, {src}, sizeof({dest}) - 1);")
    body.add(d, f"{dest}[{dn - 1}] = '\\0';")
    return "char"


def _oe(rng, body: _Body, d: int, bad: bool) -> str:
    dn = rng.randint(8, 40)
    sn = dn + rng.randint(2, 40)
    dest, src = rng.choice(DEST_NAMES), rng.choice(SRC_NAMES)
    api = rng.choice(("strncpy", "memcpy"))
    body.add(d, f"char {src}[{sn}];")
    body.add(d, f"char {dest}[{dn}];")
    _fill_source(body, d, src, sn)
    _chatter(rng, body, d)
    if bad:
        body.mark(d, "FLAW: one byte past the end of the destination",
                  f"{api}({dest}, {src}, {dn + 1});")
    else:
        body.mark(d, "FIX: leave room for the terminator", f"{api}({dest}, {src}, {dn - 1});")
    body.add(d, f"{dest}[{dn - 1}] = '\\0';")
    return "char"


def _bo(rng, body: _Body, d: int, bad: bool) -> str:
    sn = rng.randint(8, 40)
    dn = sn + rng.randint(2, 40)
    dest, src = rng.choice(DEST_NAMES), rng.choice(SRC_NAMES)
    api = rng.choice(("memcpy", "memmove"))
    body.add(d, f"char {src}[{sn}];")
    body.add(d, f"char {dest}[{dn}];")
    _fill_source(body, d, src, sn)
    _chatter(rng, body, d)
    if bad:
        body.mark(d, "FLAW: reads more bytes than the source holds",
                  f"{api}({dest}, {src}, {dn});")
    else:
        body.mark(d, "FIX: read no more than the source holds", f"{api}({dest}, {src}, {sn});")
    body.add(d, f"{dest}[{dn - 1}] = '\\0';")
    return "char"


def _alloc(rng, body: _Body, d: int, name: str) -> int:
    n = rng.randint(16, 128)
    body.add(d, f"char *{name};")
    body.add(d, f"{name} = (char *)malloc({n}*sizeof(char));")
    _null_check(body, d, name)
    return n


def _df(rng, body: _Body, d: int, bad: bool) -> str:
    name = rng.choice(DEST_NAMES)
    _alloc(rng, body, d, name)
    body.add(d, f"{name}[0] = '\\0';")
    if bad:
        body.add(d, f"free({name});")
        _chatter(rng, body, d)
        body.mark(d, f"FLAW: {name} is freed a second time", f"free({name});")
    else:
        _chatter(rng, body, d)
        body.mark(d, f"FIX: {name} is freed once", f"free({name});")
    return "char"


def _uaf(rng, body: _Body, d: int, bad: bool) -> str:
    name = rng.choice(DEST_NAMES)
    n = _alloc(rng, body, d, name)
    body.add(d, f"memset({name}, 'A', {n - 1});")
    body.add(d, f"{name}[{n - 1}] = '\\0';")
    use = f'printf("%s\\n", {name});'
    if bad:
        body.add(d, f"free({name});")
        _chatter(rng, body, d)
        body.mark(d, f"FLAW: {name} is used after it was freed", use)
    else:
        body.mark(d, f"FIX: {name} is used before it is freed", use)
        _chatter(rng, body, d)
        body.add(d, f"free({name});")
    return "char"


def _index_sample(rng, body: _Body, d: int, bad: bool, write: bool) -> str:
    idx = rng.choice(("data", "index", "i", "pos"))
    buf = rng.choice(("buffer", "table", "values"))
    n = rng.randint(5, 20)
    body.add(d, f"int {idx};")
    body.add(d, f"int {buf}[{n}];")
    if not write:
        body.add(d, "int value;")
    body.add(d, f"{idx} = {rng.randint(-12, -1)};")
    _chatter(rng, body, d)
    if bad:
        cond, note_cond = f"{idx} < {n}", None
    else:
        lower = rng.choice((f"{idx} >= 0", f"{idx} > -1"))
        cond = f"{lower} && {idx} < {n}"
        note_cond = "FIX: check the lower bound as well"
    if note_cond:
        body.mark(d, note_cond, f"if ({cond})")
    else:
        body.add(d, f"if ({cond})")
    body.add(d, "{")
    if write:
        stmt = f"{buf}[{idx}] = 1;"
        note = f"FLAW: {idx} may be negative, so the write lands before {buf}"
    else:
        stmt = f"value = {buf}[{idx}];"
        note = f"FLAW: {idx} may be negative, so the read starts before {buf}"
    if bad:
        body.mark(d + 1, note, stmt)
    else:
        body.add(d + 1, stmt)
    if not write:
        body.add(d + 1, 'printf("%d\\n", value);')
    body.add(d, "}")
    return "int"


def _buw(rng, body, d, bad):
    return _index_sample(rng, body, d, bad, True)


def _bur(rng, body, d, bad):
    return _index_sample(rng, body, d, bad, False)


def _ra(rng, body: _Body, d: int, bad: bool) -> str:
    n = rng.randint(16, 100)
    buf = rng.choice(("inputBuffer", "line", "input"))
    body.add(d, f"char {buf}[{n}];")
    body.add(d, "int data;")
    _chatter(rng, body, d)
    read = f"fgets({buf}, {n}, stdin);"
    if bad:
        body.mark(d, "FLAW: console input is used without a range check", read)
        body.add(d, f"data = atoi({buf});")
        body.add(d, 'printf("%d\\n", data);')
    else:
        body.add(d, read)
        body.add(d, f"data = atoi({buf});")
        body.mark(d, "FIX: the value read is range checked", "if (data >= 0 && data < 10)")
        body.add(d, "{")
        body.add(d + 1, 'printf("%d\\n", data);')
        body.add(d, "}")
    return "char"


def _wa(rng, body: _Body, d: int, bad: bool) -> str:
    dn = rng.randint(8, 40)
    sn = dn + rng.randint(2, 60)
    dest, src = rng.choice(DEST_NAMES), rng.choice(SRC_NAMES)
    body.add(d, f"char {src}[{sn}];")
    body.add(d, f"char {dest}[{dn}];")
    _fill_source(body, d, src, sn)
    _chatter(rng, body, d)
    if bad:
        call = f"{rng.choice(('memcpy', 'strncpy'))}({dest}, {src}, strlen({src}));"
        body.mark(d, "FLAW: the length written is not the destination's", call)
    else:
        body.mark(d, "FIX: the length written is the destination's",
                  f"strncpy({dest}, {src}, sizeof({dest}) - 1);")
    body.add(d, f"{dest}[{dn - 1}] = '\\0';")
    return "char"


TEMPLATES: dict[FeatureId, Callable[[random.Random, _Body, int, bool], str]] = {
    FeatureId.IBS: _ibs, FeatureId.BSB: _bsb, FeatureId.OE: _oe, FeatureId.BO: _bo,
    FeatureId.DF: _df, FeatureId.UAF: _uaf, FeatureId.BUW: _buw, FeatureId.BUR: _bur,
    FeatureId.RA: _ra, FeatureId.WA: _wa,
}


def _slug(feature: FeatureId) -> str:
    return feature.title.replace("-", "_").replace(" ", "_")


def gen_sample(feature: FeatureId, k: int, vulnerable: bool, seed: int = 0) -> CodeSample:
    """One Juliet-style file; deterministic in (feature, k, vulnerable, seed)."""
    rng = random.Random(f"{seed}:{feature.value}:{k}:{int(vulnerable)}")
    body = _Body([])
    wrap = rng.random() < 0.3
    inner = _Body([])
    elem = TEMPLATES[feature](rng, inner if wrap else body, 2 if wrap else 1, vulnerable)
    if wrap:
        # keep declarations at the top, wrap the rest in a constant-true branch
        split = next(i for i, (_, t) in enumerate(inner.lines)
                     if not t.startswith(("char ", "int ", "int *", "char *")))
        body.lines = [(1, t) for _, t in inner.lines[:split]]
        body.add(1, "if (GLOBAL_CONST_TRUE)")
        body.add(1, "{")
        offset = len(body.lines)
        body.lines += inner.lines[split:]
        body.add(1, "}")
        body.marked = inner.marked - split + offset
    cwe = feature.cwe
    variant = "bad" if vulnerable else "good"
    fn = f"{cwe}_{_slug(feature)}__{elem}_{k:05d}_{variant}"
    head = [
        f"/* {cwe} {feature.title}",
        f" * {'Flawed' if vulnerable else 'Fixed'} variant {k} */",
        "#include <stdio.h>",
        "#include <stdlib.h>",
        "#include <string.h>",
    ]
    if wrap:
        head.append("#define GLOBAL_CONST_TRUE 1")
    head += ["", f"void {fn}(void)", "{"]
    lines = head + ["    " * dep + t for dep, t in body.lines] + ["}"]
    flaw_line = len(head) + body.marked + 1
    if rng.random() < 0.5:
        lines += ["", "int main(void)", "{", f"    {fn}();", "    return 0;", "}"]
    source = "\n".join(lines) + "\n"
    sid = f"{feature.value}_{k:05d}_{variant}"
    return CodeSample(sid, f"{cwe}_{_slug(feature)}__{k:05d}_{variant}.c",
                      Label.VULNERABLE if vulnerable else Label.NON_VULNERABLE, source, cwe,
                      frozenset({flaw_line}) if vulnerable else frozenset(), feature.value)


def gen_corpus(n: int = 40, seed: int = 0) -> list[CodeSample]:
    """``n`` samples cycling through the ten features, alternating flawed
    and fixed, so every block of 20 holds one of each per feature."""
    features = list(FeatureId)
    out = []
    for i in range(n):
        feature = features[(i // 2) % len(features)]
        k = i // (2 * len(features))
        out.append(gen_sample(feature, k, i % 2 == 0, seed))
    return out

