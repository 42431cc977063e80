"""Prediction records and their JSONL form.

One JSON object per line::

    {"id": "<sample or variant id>", "predicted_label": "vulnerable", "detector_id": "oracle"}
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from ..frontend.sample import Label


@dataclass(frozen=True)
class PredictionRecord:
    id: str
    predicted_label: Label
    detector_id: str

    def __post_init__(self):
        object.__setattr__(self, "predicted_label", Label(self.predicted_label))

    def to_dict(self) -> dict:
        return {"id": self.id, "predicted_label": self.predicted_label.value,
                "detector_id": self.detector_id}


def dump_predictions(records: Iterable[PredictionRecord]) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records)


def load_predictions(text: str) -> list[PredictionRecord]:
    """Parse JSONL predictions; a repeated (detector, id) pair is an error."""
    out, seen = [], set()
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            r = PredictionRecord(d["id"], d["predicted_label"], d["detector_id"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"prediction line {n}: {exc}") from exc
        if (r.detector_id, r.id) in seen:
            raise ValueError(f"prediction line {n}: duplicate id {r.id} for {r.detector_id}")
        seen.add((r.detector_id, r.id))
        out.append(r)
    return out


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    return load_predictions(Path(path).read_text(encoding="utf-8"))


def write_predictions(path: str | Path, records: Iterable[PredictionRecord]) -> None:
    Path(path).write_text(dump_predictions(records), encoding="utf-8")


def by_detector(records: Iterable[PredictionRecord]) -> dict[str, list[PredictionRecord]]:
    out: dict[str, list[PredictionRecord]] = {}
    for r in records:
        out.setdefault(r.detector_id, []).append(r)
    return dict(sorted(out.items()))
