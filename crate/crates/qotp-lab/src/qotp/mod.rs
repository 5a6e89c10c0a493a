//! Quantum one-time programs for channels: controlled compilation, the sender's message,
//! the receiver, the simulator and the exact real/ideal comparison.

pub mod compare;
pub mod controlled;
pub mod plan;
pub mod protocol;
pub mod simulator;
pub mod teleport;
pub mod verifier;

pub use compare::{attack_epsilon, Comparison, ComparisonReport, TapeRng, World};
pub use controlled::{compile_controlled_program, controlled_gate, parse_gate, CompiledProgram, Correction, Registers};
pub use plan::{RoundKind, RoundLayout, StepBlocks};
pub use protocol::{
    audit_final_key, honest_receiver_run, prepare_sender_message, run_receiver, Adversary, AttackContext, AttackTarget,
    BrOtpMode, EnvRegisters, FinalKeyAudit, Honest, MessageLayout, PauliAttack, QotpOracle, QotpSetup, ReceiverOutcome,
    RoundRecord, SenderMessage,
};
pub use simulator::{prepare_simulated_message, IdealCall, IdealChannel, SimulatorOracle};
pub use verifier::{SenderKeys, Verifier};

use thiserror::Error;

use crate::cotp::{AbortReason, CotpError};
use crate::gadgets::GadgetError;
use crate::pauli::PauliError;
use crate::sim::SimError;
use crate::trap::TrapError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QotpError {
    #[error("gate: {0}")]
    Gate(String),
    #[error("wiring: {0}")]
    Wire(String),
    #[error("protocol contract: {0}")]
    Contract(String),
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("view is not affine in the randomness: {0}")]
    Nonaffine(String),
    #[error("BR-OTP aborted: {0:?}")]
    Abort(AbortReason),
    #[error(transparent)]
    Trap(#[from] TrapError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Cotp(#[from] CotpError),
}
