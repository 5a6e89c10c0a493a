//! Trap-code quantum authentication, computing on authenticated data, and
//! quantum one-time programs, simulated exactly at desk scale.

pub mod dense;
pub mod pauli;
pub mod sim;
pub mod css;
pub mod gf2;
pub mod harness;
pub mod rng;
pub mod stats;
pub mod twirl;
pub mod trap;
pub mod gadgets;
pub mod cotp;
pub mod qotp;
