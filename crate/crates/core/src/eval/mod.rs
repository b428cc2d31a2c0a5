//! Field, atomic, per-class and error-detection metrics over prediction records.

mod format;
mod metrics;
mod predict;
mod record;
mod report;

pub use format::{pct1, pct2};
pub use metrics::{
    atomic_accuracy, confusion_matrix, error_detection_metrics, field_accuracy, precision_recall, CategoryRecall,
    ClassField, ClassMetrics, ClassScore, ConfusionMatrix, ErrorDetection, EvalError, Field, MALFORMED, NO_FLAGS,
};
pub use predict::predict_batch;
pub use record::{
    load_predictions, read_predictions, write_predictions, Prediction, PredictionIoError, PredictionRecord,
    PredictionSet, UnreadableLine,
};
pub use report::{
    build_report, emit_report, read_machine, render_machine, render_text, step_metrics, Counts, FieldAccuracy,
    MetricsReport, ReportFormat, StepMetrics,
};
