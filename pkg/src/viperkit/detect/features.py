"""Feature identifiers and the witness record."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Mapping


class FeatureId(str, enum.Enum):
    IBS = "IBS"
    BSB = "BSB"
    OE = "OE"
    BO = "BO"
    DF = "DF"
    UAF = "UAF"
    BUW = "BUW"
    BUR = "BUR"
    RA = "RA"
    WA = "WA"

    @property
    def rule(self) -> str:
        return RULE_IDS[self]

    @property
    def title(self) -> str:
        return TITLES[self]

    @property
    def cwe(self) -> str:
        return CWE[self]

    @property
    def order(self) -> int:
        return _ORDER[self]


RULE_IDS = {f: f"2.{k}" for k, f in enumerate(FeatureId, start=1)}
_ORDER = {f: k for k, f in enumerate(FeatureId)}

TITLES = {
    FeatureId.IBS: "Incorrect Calculation of Buffer Size",
    FeatureId.BSB: "Buffer Access Using Size of Source Buffer",
    FeatureId.OE: "Off-by-one Error",
    FeatureId.BO: "Buffer Over-read",
    FeatureId.DF: "Double-Free",
    FeatureId.UAF: "Use-After-Free",
    FeatureId.BUW: "Buffer Underwrite",
    FeatureId.BUR: "Buffer Under-read",
    FeatureId.RA: "Read API",
    FeatureId.WA: "Write API",
}

CWE = {
    FeatureId.IBS: "CWE131",
    FeatureId.BSB: "CWE806",
    FeatureId.OE: "CWE193",
    FeatureId.BO: "CWE126",
    FeatureId.DF: "CWE415",
    FeatureId.UAF: "CWE416",
    FeatureId.BUW: "CWE124",
    FeatureId.BUR: "CWE127",
    FeatureId.RA: "CWE839",
    FeatureId.WA: "CWE805",
}

OVERFLOW = (FeatureId.IBS, FeatureId.BSB, FeatureId.OE, FeatureId.BO)
DEALLOCATED = (FeatureId.DF, FeatureId.UAF)
RANGE = (FeatureId.BUW, FeatureId.BUR)
SENSITIVE_API = (FeatureId.RA, FeatureId.WA)

# required anchors: (lines, vars, constants)
SCHEMA: dict[FeatureId, tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]] = {
    FeatureId.IBS: (("def_line", "use_line"), ("dest",), ("LEN_d", "n")),
    FeatureId.BSB: (("def_line", "src_def_line", "use_line"), ("dest", "src"), ("LEN_d", "LEN_s", "n")),
    FeatureId.OE: (("def_line", "use_line"), ("dest",), ("LEN_d", "n")),
    FeatureId.BO: (("src_def_line", "use_line"), ("src",), ("LEN_s", "n")),
    FeatureId.DF: (("first_free_line", "second_free_line"), ("buffer",), ()),
    FeatureId.UAF: (("dealloc_line", "use_line"), ("buffer",), ()),
    FeatureId.BUW: (("use_line",), ("buffer", "index"), ()),
    FeatureId.BUR: (("use_line",), ("buffer", "index"), ()),
    FeatureId.RA: (("use_line",), ("api",), ()),
    FeatureId.WA: (("use_line",), ("api",), ()),
}


def predicate_holds(feature: FeatureId, c: Mapping[str, int]) -> bool:
    """The rule predicate on a witness's constants (trivially true for rules
    without constants)."""
    if feature is FeatureId.IBS:
        return c["LEN_d"] < c["n"]
    if feature is FeatureId.BSB:
        return c["LEN_d"] < c["n"] and c["n"] == c["LEN_s"]
    if feature is FeatureId.OE:
        return c["n"] == c["LEN_d"] + 1
    if feature is FeatureId.BO:
        return c["LEN_s"] < c["n"]
    return True


@dataclass(frozen=True)
class FeatureWitness:
    sample_id: str
    feature: FeatureId
    function: str
    lines: Mapping[str, int]
    vars: Mapping[str, str]
    constants: Mapping[str, int] = field(default_factory=dict)
    nodes: Mapping[str, Any] = field(default_factory=dict)   # CPG node ids, for rewriting

    @property
    def anchor_line(self) -> int:
        """Line where the flaw manifests."""
        if self.feature is FeatureId.DF:
            return self.lines["second_free_line"]
        return self.lines["use_line"]

    def schema_ok(self) -> bool:
        lines, names, consts = SCHEMA[self.feature]
        return (all(k in self.lines for k in lines) and all(k in self.vars for k in names)
                and all(isinstance(self.constants.get(k), int) for k in consts)
                and predicate_holds(self.feature, self.constants))

    def key(self) -> tuple:
        return (self.sample_id, self.function, self.feature.value,
                tuple(sorted(self.lines.items())), tuple(sorted(self.vars.items())),
                tuple(sorted(self.constants.items())))

    def to_dict(self) -> dict:
        nodes = {k: list(v) if isinstance(v, tuple) else v for k, v in self.nodes.items()}
        return {"sample_id": self.sample_id, "feature": self.feature.value,
                "rule": self.feature.rule, "function": self.function,
                "lines": dict(self.lines), "vars": dict(self.vars),
                "constants": dict(self.constants), "nodes": nodes}

    @classmethod
    def from_dict(cls, d: Mapping) -> "FeatureWitness":
        nodes = {k: tuple(v) if isinstance(v, list) else v for k, v in d.get("nodes", {}).items()}
        return cls(d["sample_id"], FeatureId(d["feature"]), d["function"],
                   dict(d["lines"]), dict(d["vars"]), dict(d.get("constants", {})), nodes)
