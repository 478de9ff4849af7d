//! The sequential-measurement experiment: configuration, trial scheduling,
//! log persistence, correlation/incompatibility analysis and the score
//! game that estimates measurement incompatibility.

mod analyze;
mod config;
mod game;
mod log;
mod run;

use thiserror::Error;

pub use analyze::{
    analyze_log, ContextRow, CorrelationReport, DirectionReport, EpsilonStat, PairStats,
};
pub use config::{ExperimentConfig, ScheduleMode};
pub use game::{expected_game_score, run_incompatibility_game, GameScoreLog, GameTrial};
pub use log::{forward_contexts, reversed_contexts, TrialLog, TrialRecord};
pub use run::{order_marginals, OrderMarginals, Simulator};

use crate::channels::ChannelError;
use crate::qutrit::QutritError;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed log row at line {line}: {message}")]
    MalformedRow { line: usize, message: String },
    #[error("log is missing ordered context ({0}, {1})")]
    MissingContext(u8, u8),
    #[error("log contains no accepted trials")]
    EmptyLog,
    #[error("initialization was never accepted for trial {0}")]
    InitNeverAccepted(u64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Qutrit(#[from] QutritError),
}
