"""Join predictions with variant ground truth and score detectors."""
from .metrics import (DEFAULT_EPSILON, DEFAULT_FEP_FLOOR, UNDEFINED, Accuracy, AccuracyDelta,
                      DetectorCategory, MissingPrediction, SatisfactionResult, VariantEntry,
                      accuracy_delta, classify, confusion, fpp_mean, percent, render_percent,
                      satisfaction)
from .predictions import (PredictionRecord, by_detector, dump_predictions, load_predictions,
                          read_predictions, write_predictions)
from .reference import oracle_label, reference_detector
from .report import (SF_ROWS, VF_ROWS, CorpusSummary, DetectorReport, EvaluationReport,
                     dump_report, emit_report, evaluate_detector, load_report, parse_report,
                     render_table)
