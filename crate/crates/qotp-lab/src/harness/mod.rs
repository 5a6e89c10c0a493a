//! Seeded experiment driver: one suite per command, each producing checks with bounds.

mod classical;
mod codes;
pub mod config;
mod gadgets;
mod protocol;
pub mod report;
mod teleport;

use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

use crate::cotp::CotpError;
use crate::css::CodeError;
use crate::gadgets::GadgetError;
use crate::pauli::PauliError;
use crate::qotp::QotpError;
use crate::sim::SimError;
use crate::trap::TrapError;

pub use config::{AdversarySpec, CodeConfig, Command, ExperimentConfig, ProgramDescriptor, SampleCounts, Tolerances};
pub use report::{emit_report, to_canonical_json, Check, Ensemble, ExperimentReport, Format, Relation, SuiteOutput, SweepRow};

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "QOTP_LAB_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown command {0:?}")]
    UnknownCommand(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("capability exceeded: {0}")]
    Capability(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("serialization: {0}")]
    Serialize(String),
    #[error(transparent)]
    Qotp(#[from] QotpError),
    #[error(transparent)]
    Trap(#[from] TrapError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Cotp(#[from] CotpError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

fn sim_capability(e: &SimError) -> bool {
    matches!(e, SimError::Capacity { .. } | SimError::RankBudget { .. } | SimError::KeepTooLarge(_))
}

impl HarnessError {
    /// Errors from a run outgrowing a backend; these become a failing check.
    pub fn is_capability(&self) -> bool {
        match self {
            HarnessError::Capability(_) => true,
            HarnessError::Sim(e) => sim_capability(e),
            HarnessError::Qotp(QotpError::Capacity(_) | QotpError::Budget(_)) => true,
            HarnessError::Qotp(QotpError::Sim(e)) => sim_capability(e),
            HarnessError::Trap(TrapError::Sim(e)) => sim_capability(e),
            HarnessError::Gadget(GadgetError::Sim(e)) => sim_capability(e),
            _ => false,
        }
    }

    /// Errors caused by the configuration itself.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            HarnessError::UnknownCommand(_)
                | HarnessError::Config(_)
                | HarnessError::Code(_)
                | HarnessError::Pauli(_)
                | HarnessError::Qotp(QotpError::Gate(_) | QotpError::Wire(_))
        )
    }
}

/// Worker count from [`THREADS_ENV`]; 0 lets the pool decide.
pub fn worker_threads() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

fn dispatch(config: &ExperimentConfig) -> Result<SuiteOutput, HarnessError> {
    match config.command {
        Command::TwirlCheck => codes::twirl_check(config),
        Command::TrapSecurity => codes::trap_security(config),
        Command::GadgetCheck => gadgets::gadget_check(config),
        Command::QotpRun => protocol::qotp_run(config),
        Command::QotpAttack => protocol::qotp_attack(config),
        Command::SimCompare => protocol::sim_compare(config),
        Command::TeleportCheck => teleport::teleport_check(config),
        Command::BrotpCheck => classical::brotp_check(config),
    }
}

/// Runs the configured suite on a pool of [`worker_threads`] workers.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    let start = Instant::now();
    let out = match pool.install(|| dispatch(config)) {
        Ok(out) => out,
        Err(e) if e.is_capability() => {
            let mut out = SuiteOutput::default();
            out.check(Check::new("within_capability", 0.0, Relation::Eq, 1.0, Ensemble::Exhaustive));
            out.record("error", &e.to_string())?;
            out
        }
        Err(e) => return Err(e),
    };
    Ok(ExperimentReport::new(config.clone(), out, Some(start.elapsed())))
}
