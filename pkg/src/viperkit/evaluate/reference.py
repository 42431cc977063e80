"""Built-in detectors used to check the harness itself."""
from __future__ import annotations

import random
import re
from typing import AbstractSet, Iterable, Optional, Protocol

from ..cpg.consts import DEFAULT_SIZEOF, SizeofModel
from ..detect.analysis import AnalysisError, detect_source
from ..frontend.sample import Label
from .predictions import PredictionRecord

KINDS = ("oracle", "constant_vulnerable", "constant_benign", "random")
_RANDOM = re.compile(r"random(?:\((-?\d+)\))?\Z")


class Predictable(Protocol):
    source: str
    vulnerable_lines: AbstractSet[int]


def item_id(item) -> str:
    return getattr(item, "variant_id", None) or item.sample_id


def parse_kind(kind: str) -> tuple[str, Optional[int]]:
    """``"random(7)"`` -> ("random", 7); other kinds carry no seed."""
    m = _RANDOM.match(kind)
    if m:
        return "random", int(m.group(1)) if m.group(1) is not None else None
    if kind not in KINDS:
        raise ValueError(f"unknown reference detector {kind!r}")
    return kind, None


def oracle_label(item: Predictable, use_lines: bool = True,
                 sizes: SizeofModel = DEFAULT_SIZEOF) -> Label:
    """Vulnerable iff the rules find any witness. Unparseable sources are benign."""
    lines = item.vulnerable_lines if use_lines else None
    try:
        found = detect_source(item.source, lines, item_id(item), sizes)
    except AnalysisError:
        return Label.NON_VULNERABLE
    return Label.VULNERABLE if found else Label.NON_VULNERABLE


def reference_detector(kind: str, corpus: Iterable[Predictable], seed: Optional[int] = None,
                       use_lines: bool = True,
                       sizes: SizeofModel = DEFAULT_SIZEOF) -> list[PredictionRecord]:
    """Predictions of a reference detector, one per item, in input order.

    ``kind`` is oracle, constant_vulnerable, constant_benign or random; the
    random detector may carry its seed inline (``random(7)``), which wins
    over ``seed``. Its draw for
    an item depends only on the seed and the item id.
    """
    name, inline_seed = parse_kind(kind)
    if name == "random":
        # an inline seed beats the argument, which is often just a default
        seed = inline_seed if inline_seed is not None else (seed or 0)
        detector_id = f"random({seed})"
    else:
        detector_id = name
    out = []
    for item in corpus:
        ident = item_id(item)
        if name == "oracle":
            label = oracle_label(item, use_lines, sizes)
        elif name == "constant_vulnerable":
            label = Label.VULNERABLE
        elif name == "constant_benign":
            label = Label.NON_VULNERABLE
        else:
            r = random.Random(f"{seed}:{ident}")
            label = Label.VULNERABLE if r.random() < 0.5 else Label.NON_VULNERABLE
        out.append(PredictionRecord(ident, label, detector_id))
    return out
