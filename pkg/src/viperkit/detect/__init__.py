"""Vulnerability-feature detection rules and SARD validation."""
from .analysis import (Analysis, AnalysisError, AnnotatedSample, SampleAgreement,
                       ValidationReport, analyze_source, annotate_sample, detect_source,
                       dump_witnesses, load_witnesses, validate_against_sard)
from .features import (CWE, DEALLOCATED, OVERFLOW, RANGE, SCHEMA, SENSITIVE_API,
                       FeatureId, FeatureWitness, predicate_holds)
from .rules import (buffer_definitions, detect_all, detect_deallocated_use, detect_overflow,
                    detect_range_check, detect_sensitive_api, is_lower_guard)

__all__ = [
    "Analysis", "AnalysisError", "AnnotatedSample", "SampleAgreement", "ValidationReport",
    "analyze_source", "annotate_sample", "detect_source", "dump_witnesses", "load_witnesses",
    "validate_against_sard", "CWE", "DEALLOCATED", "OVERFLOW", "RANGE", "SCHEMA",
    "SENSITIVE_API", "FeatureId", "FeatureWitness", "predicate_holds", "buffer_definitions",
    "detect_all", "detect_deallocated_use", "detect_overflow", "detect_range_check",
    "detect_sensitive_api", "is_lower_guard",
]
