from .metrics import ScoreError, ScoreSet, auc, compute_eer, error_rates
from .report import (
    HIST_BINS,
    ClassEntropy,
    EvalReport,
    EvaluationError,
    build_report,
    entropy_stats,
    evaluate,
    perturb_eval,
    write_entropy_summary,
    write_frame_table,
    write_histogram,
    write_perturb_table,
    write_scores,
    write_summary,
)
