"""Targeted perturbation: FPP/FEP rewrites per feature and spurious-feature edits."""
from .engine import PerturbResult, perturb_sample
from .sf import (SymbolMap, build_symbol_map, gen_sf_all, gen_sf_edge_set, gen_sf_formatting,
                 gen_sf_identifier, gen_sf_node_set, token_line_map)
from .variant import (SF_KINDS, CheckResult, PerturbedVariant, UneditableWitness, VariantKind,
                      check_variant, fep_label, variant_id, witness_signature)
from .vf import CALLEE_SWAPS, gen_vf_perturbations

__all__ = [
    "PerturbResult", "perturb_sample", "SymbolMap", "build_symbol_map", "gen_sf_all",
    "gen_sf_edge_set", "gen_sf_formatting", "gen_sf_identifier", "gen_sf_node_set",
    "token_line_map", "SF_KINDS", "CheckResult", "PerturbedVariant", "UneditableWitness",
    "VariantKind", "check_variant", "fep_label", "variant_id", "witness_signature",
    "CALLEE_SWAPS", "gen_vf_perturbations",
]
