//! Domain and function corpora, experiment pipelines and their reports.

mod config;
mod domain;
mod function;
mod report;
mod run;

use std::path::Path;

use thiserror::Error;

pub use config::{tip_function, ConfigDocument, ExperimentConfig, OneOrMany, Pipeline};
pub use domain::{gen_domain, DomainEntry, DomainSpec, ROOM_GAP};
pub use function::{gen_function, FunctionEntry, FunctionSpec};
pub use report::{
    validate_report_json, Aggregate, ExperimentReport, InvariantFailure, ReportItem, ResolutionAggregate,
    REPORT_SCHEMA, REPORT_SCHEMA_VERSION,
};
pub use run::run_experiment;

#[derive(Debug, Error)]
pub enum LabError {
    /// Invalid configuration; `path` names the offending key.
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("writing output: {0}")]
    Output(String),
}

impl LabError {
    pub(crate) fn config(path: &str, message: String) -> Self {
        LabError::Config {
            path: path.to_string(),
            message,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
