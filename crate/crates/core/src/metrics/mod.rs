//! Leakage assessment and evaluation: difference-of-means and SNR curves,
//! key rank and success rates, figure tables and run reports.

mod figures;
mod leakage;
mod rank;
mod report;

pub use figures::{emit_figure_data, FigureData, FigureTag, Table};
pub use leakage::{
    difference_of_means, difference_of_means_labels, snr_per_stamp, snr_per_stamp_labels,
    DmAccumulator, SnrCurve,
};
pub use rank::{
    guessing_entropy, key_rank, success_rate, success_rate_over, wilson_interval, RankPoint,
    SuccessRate,
};
pub use report::{EvaluationReport, ExperimentRecord, REPORT_SCHEMA_VERSION};

use thiserror::Error;

use crate::crypto::BitId;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("class {class} is empty")]
    EmptyClass { class: u8 },
    #[error("class {class} needs at least {needed} traces, has {got}")]
    TooFewInClass { class: u8, needed: usize, got: usize },
    #[error("trace {index} has no value for {bit}")]
    Unlabeled { index: usize, bit: BitId },
    #[error("labels ({labels}) and traces ({traces}) differ in number")]
    LabelCount { labels: usize, traces: usize },
    #[error("unknown figure tag {0:?}")]
    UnknownFigure(String),
    #[error("figure {tag} needs {what}")]
    MissingData { tag: &'static str, what: &'static str },
    #[error("malformed table: {0}")]
    Table(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
