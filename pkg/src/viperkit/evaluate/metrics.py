"""Satisfaction rates, HH/HL/LH/LL classification and accuracy deltas.

All rates are exact :class:`~fractions.Fraction` percentages; ``None``
stands for UNDEFINED (zero denominator).
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from ..frontend.sample import Label

UNDEFINED = None
Rate = Optional[Fraction]

DEFAULT_EPSILON = Fraction(3)
DEFAULT_FEP_FLOOR = Fraction(51)


class MissingPrediction(KeyError):
    def __init__(self, ids: Sequence[str]):
        super().__init__(f"{len(ids)} missing prediction(s): {', '.join(ids[:10])}")
        self.ids = list(ids)


def percent(num: int, den: int) -> Rate:
    return Fraction(100 * num, den) if den else UNDEFINED


def render_percent(rate: Rate) -> str:
    """Two decimals, half-up; UNDEFINED renders as ``-``."""
    if rate is None:
        return "-"
    d = Decimal(rate.numerator) / Decimal(rate.denominator)
    return str(d.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def fraction_text(rate: Rate) -> Optional[str]:
    return None if rate is None else f"{rate.numerator}/{rate.denominator}"


def parse_fraction(text: Optional[str]) -> Rate:
    return None if text is None else Fraction(text)


@dataclass(frozen=True)
class VariantEntry:
    """The part of a variant-manifest record the harness needs."""
    variant_id: str
    sample_id: str
    kind: str
    feature: Optional[str]
    expected_label: Optional[Label]
    partial: bool = False
    noop: bool = False

    @classmethod
    def from_record(cls, r: Mapping) -> "VariantEntry":
        label = r.get("expected_label")
        return cls(r["variant_id"], r["sample_id"], r["kind"], r.get("feature"),
                   Label(label) if label else None, bool(r.get("partial", False)),
                   bool(r.get("noop", False)))


@dataclass(frozen=True)
class SatisfactionResult:
    feature: str                # a FeatureId value or an SF kind
    t_fpp: int
    t_fep: int
    kept_fpp: int               # T'_FPP
    flipped_fep: int            # T'_FEP
    excluded_partial: int = 0

    def __post_init__(self):
        if not (0 <= self.kept_fpp <= self.t_fpp and 0 <= self.flipped_fep <= self.t_fep):
            raise ValueError(f"inconsistent counts for {self.feature}")

    @property
    def sr(self) -> Rate:
        return percent(self.kept_fpp + self.flipped_fep, self.t_fpp + self.t_fep)

    @property
    def sr_fpp(self) -> Rate:
        return percent(self.kept_fpp, self.t_fpp)

    @property
    def sr_fep(self) -> Rate:
        return percent(self.flipped_fep, self.t_fep)

    def to_dict(self) -> dict:
        return {"feature": self.feature, "T_FPP": self.t_fpp, "T_FEP": self.t_fep,
                "T'_FPP": self.kept_fpp, "T'_FEP": self.flipped_fep,
                "excluded_partial": self.excluded_partial,
                "SR": fraction_text(self.sr), "SR_FPP": fraction_text(self.sr_fpp),
                "SR_FEP": fraction_text(self.sr_fep)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SatisfactionResult":
        return cls(d["feature"], d["T_FPP"], d["T_FEP"], d["T'_FPP"], d["T'_FEP"],
                   d.get("excluded_partial", 0))


def _labels(records: Iterable) -> dict[str, Label]:
    out = {}
    for r in records:
        out[r.id] = r.predicted_label
    return out


def satisfaction(feature: str, preds_original: Iterable, preds_variants: Iterable,
                 manifest: Iterable[VariantEntry], include_partial: bool = False,
                 fpp_kinds: Sequence[str] = ("FPP",)) -> SatisfactionResult:
    """Count retained FPP predictions and flipped FEP predictions.

    ``feature`` selects variants by their feature field, or by kind for the
    SF rows (pass the SF kind and ``fpp_kinds=(kind,)``). Partial FEPs are
    left out unless ``include_partial``.
    """
    orig = _labels(preds_original)
    var = _labels(preds_variants)
    t_fpp = t_fep = kept = flipped = excluded = 0
    missing: list[str] = []
    is_sf = feature.startswith("SF_")
    for v in manifest:
        if v.noop or v.kind == "DIAGNOSTIC":
            continue
        if is_sf:
            if v.kind != feature:
                continue
        elif v.feature != feature:
            continue
        if v.kind == "FEP" and v.partial and not include_partial:
            excluded += 1
            continue
        if v.sample_id not in orig:
            missing.append(v.sample_id)
        if v.variant_id not in var:
            missing.append(v.variant_id)
        if missing:
            continue
        same = var[v.variant_id] == orig[v.sample_id]
        if v.kind in fpp_kinds or (is_sf and v.kind == feature):
            t_fpp += 1
            kept += same
        elif v.kind == "FEP":
            t_fep += 1
            flipped += not same
    if missing:
        raise MissingPrediction(sorted(set(missing)))
    return SatisfactionResult(feature, t_fpp, t_fep, kept, flipped, excluded)


# -- classification ----------------------------------------------------------------

@dataclass(frozen=True)
class DetectorCategory:
    label: str                  # HH | HL | LH | LL | UNCLASSIFIED
    fpp_high: Optional[bool]
    fep_high: Optional[bool]
    fpp_threshold: Rate
    fep_floor: Fraction

    def to_dict(self) -> dict:
        return {"label": self.label, "fpp_high": self.fpp_high, "fep_high": self.fep_high,
                "fpp_threshold": fraction_text(self.fpp_threshold),
                "fep_floor": fraction_text(self.fep_floor)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "DetectorCategory":
        return cls(d["label"], d["fpp_high"], d["fep_high"], parse_fraction(d["fpp_threshold"]),
                   Fraction(d["fep_floor"]))


def classify(result: SatisfactionResult, fpp_reference_mean: Rate,
             epsilon: Fraction | int = DEFAULT_EPSILON,
             fep_floor: Fraction | int = DEFAULT_FEP_FLOOR) -> DetectorCategory:
    """FPP is high iff SR_FPP >= mean - epsilon; FEP is high iff SR_FEP >= floor."""
    epsilon, fep_floor = Fraction(epsilon), Fraction(fep_floor)
    threshold = None if fpp_reference_mean is None else Fraction(fpp_reference_mean) - epsilon
    fpp, fep = result.sr_fpp, result.sr_fep
    fpp_high = None if fpp is None or threshold is None else fpp >= threshold
    fep_high = None if fep is None else fep >= fep_floor
    if fpp_high is None or fep_high is None:
        label = "UNCLASSIFIED"
    else:
        label = ("H" if fpp_high else "L") + ("H" if fep_high else "L")
    return DetectorCategory(label, fpp_high, fep_high, threshold, fep_floor)


def fpp_mean(results: Iterable[SatisfactionResult]) -> Rate:
    """Mean SR_FPP over the results where it is defined."""
    rates = [r.sr_fpp for r in results if r.sr_fpp is not None]
    return sum(rates, Fraction(0)) / len(rates) if rates else UNDEFINED


# -- accuracy ------------------------------------------------------------------------

@dataclass(frozen=True)
class Accuracy:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def precision(self) -> Rate:
        d = self.tp + self.fp
        return Fraction(self.tp, d) if d else UNDEFINED

    @property
    def recall(self) -> Rate:
        d = self.tp + self.fn
        return Fraction(self.tp, d) if d else UNDEFINED


def confusion(preds: Iterable, truths: Mapping[str, Label]) -> Accuracy:
    tp = fp = fn = tn = 0
    missing = []
    for r in preds:
        if r.id not in truths:
            missing.append(r.id)
            continue
        p = r.predicted_label is Label.VULNERABLE
        t = truths[r.id] is Label.VULNERABLE
        tp += p and t
        fp += p and not t
        fn += t and not p
        tn += not p and not t
    if missing:
        raise MissingPrediction(missing)
    return Accuracy(tp, fp, fn, tn)


def _delta(a: Rate, b: Rate) -> Rate:
    return None if a is None or b is None else b - a


@dataclass(frozen=True)
class AccuracyDelta:
    original: Accuracy
    perturbed: Accuracy

    @property
    def precision_delta(self) -> Rate:
        return _delta(self.original.precision, self.perturbed.precision)

    @property
    def recall_delta(self) -> Rate:
        return _delta(self.original.recall, self.perturbed.recall)

    def to_dict(self) -> dict:
        return {"original": [self.original.tp, self.original.fp, self.original.fn, self.original.tn],
                "perturbed": [self.perturbed.tp, self.perturbed.fp, self.perturbed.fn,
                              self.perturbed.tn],
                "precision": [fraction_text(self.original.precision),
                              fraction_text(self.perturbed.precision),
                              fraction_text(self.precision_delta)],
                "recall": [fraction_text(self.original.recall), fraction_text(self.perturbed.recall),
                           fraction_text(self.recall_delta)]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "AccuracyDelta":
        return cls(Accuracy(*d["original"]), Accuracy(*d["perturbed"]))


def accuracy_delta(preds_original: Iterable, preds_perturbed: Iterable,
                   truths: Mapping[str, Label]) -> tuple[Rate, Rate]:
    """(precision delta, recall delta), perturbed minus original."""
    d = AccuracyDelta(confusion(preds_original, truths), confusion(preds_perturbed, truths))
    return d.precision_delta, d.recall_delta

